#include "fxtsafe/sim.hpp"

#include <cmath>
#include <sstream>

namespace fxtsafe::sim {

void PlantModel::validate() const
{
    const auto& k = known;
    if (k.n <= 0 || k.m < 0 || k.p < 0) {
        throw ConfigError("plant: invalid dimensions");
    }
    if (!k.f || !k.g || (k.p > 0 && !k.delta)) {
        throw ConfigError("plant: missing dynamics callbacks");
    }
    if (k.u_lower.size() != k.m || k.u_upper.size() != k.m || (k.u_lower.array() > k.u_upper.array()).any()) {
        throw ConfigError("plant: invalid input bounds");
    }
    if (theta_true.size() != k.p || k.theta_box.size() != k.p || !k.theta_box.valid()) {
        throw ConfigError("plant: parameter dimensions disagree");
    }
    if (!k.theta_box.contains(theta_true)) {
        throw ConfigError("plant: true parameters outside the admissible box");
    }
}

namespace {

void check_finite(const Vec& v, double t, const char* what)
{
    if (!v.allFinite() || (v.size() > 0 && v.lpNorm<Eigen::Infinity>() > kDivergenceThreshold)) {
        std::ostringstream os;
        os << what << " diverged at t=" << t;
        throw SimulationDivergence(os.str(), t);
    }
}

}  // namespace

Vec eval_dynamics(const PlantModel& model, const Vec& x, const Vec& u, double t)
{
    const auto& k = model.known;
    Vec xdot = k.f(x) + k.g(x) * u;
    if (k.p > 0) {
        xdot += k.delta(x) * model.theta_true;
    }
    check_finite(xdot, t, "plant rate");
    return xdot;
}

Vec rk4_step(const RateFn& rate, double t, const Vec& y, double dt)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("rk4_step: dt must be positive");
    }
    const Vec k1 = rate(t, y);
    check_finite(k1, t, "rk4 stage");
    const Vec k2 = rate(t + 0.5 * dt, y + 0.5 * dt * k1);
    check_finite(k2, t, "rk4 stage");
    const Vec k3 = rate(t + 0.5 * dt, y + 0.5 * dt * k2);
    check_finite(k3, t, "rk4 stage");
    const Vec k4 = rate(t + dt, y + dt * k3);
    check_finite(k4, t, "rk4 stage");
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

void record(SimulationTrace& tr, double t, const Vec& x, const ControlOutput& out,
            const estimator::EstimatorView& view, const estimator::AdaptiveEstimator* est)
{
    tr.times.push_back(t);
    tr.states.push_back(x);
    tr.controls.push_back(out.u);
    tr.estimates.push_back(view.theta_hat);
    tr.envelope.push_back(view.eta);
    tr.barrier_values.push_back(out.h);
    tr.shrunken_values.push_back(out.h_r);
    tr.lyapunov_values.push_back(out.V);
    tr.qp_statuses.push_back(out.status);
    tr.slacks.push_back(out.slacks);
    tr.modes.push_back(out.mode);
    if (est != nullptr) {
        const auto& s = est->state();
        tr.aux_P.push_back(s.aux.P);
        tr.aux_Q.push_back(s.aux.Q);
        tr.filter_xdot_minus_phi.push_back(s.filter.xdot_f - s.filter.phi_f);
        tr.filter_Phi.push_back(s.filter.Phi_f);
        tr.activated.push_back(s.activated ? 1 : 0);
    }
}

}  // namespace

SimulationResult simulate(const PlantModel& model, const Vec& x0, Controller& controller,
                          estimator::AdaptiveEstimator* est, const SimOptions& options)
{
    model.validate();
    const auto& km = model.known;
    if (x0.size() != km.n) {
        throw ConfigError("simulate: initial state has wrong dimension");
    }
    if (!(options.dt > 0.0) || !(options.t_final >= 0.0)) {
        throw ConfigError("simulate: dt must be positive and t_final nonnegative");
    }
    const double ratio = options.t_final / options.dt;
    const long steps = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-6 * std::max(1.0, ratio)) {
        throw ConfigError("simulate: dt must divide t_final");
    }
    if (est != nullptr && (est->n() != km.n || est->p() != km.p)) {
        throw ConfigError("simulate: estimator dimensions disagree with the plant");
    }

    SimulationResult res;
    auto& tr = res.trace;
    tr.n = km.n;
    tr.m = km.m;
    tr.p = km.p;
    tr.q = controller.barrier_count();
    const std::size_t rows = static_cast<std::size_t>(steps) + 1;
    tr.times.reserve(rows);
    tr.states.reserve(rows);

    const int n = km.n;
    Vec y(n + (est != nullptr ? est->smooth_size() : 0));
    y.head(n) = x0;
    if (est != nullptr) {
        est->set_reference_state(x0);
        y.tail(est->smooth_size()) = est->pack();
    }

    Vec u_prev = Vec::Zero(km.m);
    const estimator::EstimatorView empty_view{Vec::Zero(0), 0.0, 0.0, false, Mat::Zero(0, 0), ParameterBox{}};

    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * options.dt;
        const Vec x = y.head(n);
        const auto view = est != nullptr ? est->view(t) : empty_view;

        ControlOutput out = controller.compute({t, x, view});
        if (out.status != qp::Status::optimal) {
            ++res.infeasible_steps;
            out.u = u_prev;
            if (options.infeasible_policy == InfeasiblePolicy::abort) {
                record(tr, t, x, out, view, est);
                res.outcome = Outcome::aborted_infeasible;
                res.stop_time = t;
                res.message = "controller infeasible";
                break;
            }
        }
        out.u = out.u.cwiseMax(km.u_lower).cwiseMin(km.u_upper);
        record(tr, t, x, out, view, est);
        res.stop_time = t;
        if (k == steps) {
            break;
        }

        const Vec u = out.u;
        auto rate = [&](double, const Vec& ys) {
            const Vec xs = ys.head(n);
            const Vec phi = km.f(xs) + km.g(xs) * u;
            Vec dy(ys.size());
            if (est != nullptr) {
                const Mat Phi = km.delta(xs);
                dy.head(n) = phi + Phi * model.theta_true;
                dy.tail(est->smooth_size()) = est->smooth_rates(ys.tail(est->smooth_size()), xs, phi, Phi);
            } else {
                dy.head(n) = phi;
                if (km.p > 0) {
                    dy.head(n) += km.delta(xs) * model.theta_true;
                }
            }
            return dy;
        };
        try {
            y = rk4_step(rate, t, y, options.dt);
            check_finite(y, t + options.dt, "state");
        } catch (const SimulationDivergence& e) {
            res.outcome = Outcome::diverged;
            res.stop_time = e.time();
            res.message = e.what();
            break;
        }
        if (est != nullptr) {
            est->unpack(y.tail(est->smooth_size()));
            est->update_estimate(t + options.dt, options.dt);
        }
        u_prev = u;
    }

    if (est != nullptr) {
        tr.estimator_activated = est->state().activated;
        tr.t_activate = est->state().t_activate;
        res.rate_clamps = est->clamp_events();
    }
    return res;
}

}  // namespace fxtsafe::sim
