#include "fxtsafe/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fxtsafe::scenarios {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

std::string to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::proposed: return "proposed";
        case ControllerKind::robust_baseline: return "robust_baseline";
        case ControllerKind::certainty_equivalent: return "certainty_equivalent";
    }
    return "unknown";
}

ControllerKind parse_controller_kind(const std::string& name) {
    if (name == "proposed") return ControllerKind::proposed;
    if (name == "robust_baseline" || name == "baseline") return ControllerKind::robust_baseline;
    if (name == "certainty_equivalent" || name == "ce") return ControllerKind::certainty_equivalent;
    throw ConfigError("unknown controller kind: " + name);
}

ClfCbfController::ClfCbfController(sim::KnownModel model, std::vector<safety::BarrierFunction> barriers,
                                   QpWeights weights, std::optional<Vec> known_theta)
    : model_(std::move(model)), barriers_(std::move(barriers)), weights_(std::move(weights)),
      known_theta_(std::move(known_theta)) {
    const int q = barrier_count();
    if (weights_.Q.rows() != model_.m || weights_.Q.cols() != model_.m)
        throw ConfigError("controller: Q must be m x m");
    if (weights_.p.size() != q) throw ConfigError("controller: one slack weight per barrier");
    if (weights_.p0 <= 0.0 || (weights_.p.array() <= 0.0).any())
        throw ConfigError("controller: slack weights must be positive");
    if (known_theta_ && known_theta_->size() != model_.p) throw ConfigError("controller: known theta size");
}

sim::ControlOutput ClfCbfController::compute(const sim::ControlContext& ctx) {
    const int m = model_.m;
    const int q = barrier_count();
    const int d = m + 1 + q;
    const Vec& x = ctx.x;

    estimator::EstimatorView est = ctx.estimate;
    if (known_theta_) {
        est.theta_hat = *known_theta_;
        est.eta = 0.0;
        est.eta_dot = 0.0;
        est.box = model_.theta_box;
        if (est.Gamma.rows() != model_.p) est.Gamma = Mat::Identity(model_.p, model_.p);
    } else if (est.theta_hat.size() != model_.p) {
        // No estimator attached: hedge over the whole box.
        est.box = model_.theta_box;
        est.theta_hat = est.box.center();
        est.eta = 0.5 * est.box.diameter_inf();
        est.eta_dot = 0.0;
        est.Gamma = Mat::Identity(model_.p, model_.p);
    }

    const safety::ModelEval eval{model_.f(x), model_.g(x), model_.delta(x)};
    const Objective obj = objective(ctx.t, x);

    qp::QuadraticProgram prob;
    prob.H = Mat::Zero(d, d);
    prob.H.topLeftCorner(m, m) = weights_.Q;
    prob.H(m, m) = 2.0 * weights_.p0;
    for (int i = 0; i < q; ++i) prob.H(m + 1 + i, m + 1 + i) = 2.0 * weights_.p(i);
    prob.c = Vec::Zero(d);
    prob.A = Mat::Zero(1 + q, d);
    prob.b = Vec::Zero(1 + q);
    prob.lb = Vec::Constant(d, -kInf);
    prob.ub = Vec::Constant(d, kInf);
    prob.lb.head(m) = model_.u_lower;
    prob.ub.head(m) = model_.u_upper;
    for (int i = 0; i < q; ++i) {
        prob.lb(m + 1 + i) = 1.0;
        prob.ub(m + 1 + i) = weights_.delta_max;
    }

    sim::ControlOutput out;
    out.mode = obj.mode;
    out.h = Vec::Zero(q);
    out.h_r = Vec::Zero(q);

    const safety::ClfRow clf = safety::fxt_clf_row(obj.clf, x, eval, est);
    prob.A.block(0, 0, 1, m) = clf.row.u_coeff;
    prob.A(0, m) = clf.row.slack_coeff;
    prob.b(0) = clf.row.rhs;
    out.V = clf.V;

    for (int i = 0; i < q; ++i) {
        const safety::BarrierRow br = safety::racbf_row(barriers_[i], x, eval, est);
        prob.A.block(1 + i, 0, 1, m) = br.row.u_coeff;
        prob.A(1 + i, m + 1 + i) = br.row.slack_coeff;
        prob.b(1 + i) = br.row.rhs;
        out.h(i) = br.h;
        out.h_r(i) = br.h_r;
        if (br.margin_violated) ++margin_violations_;
    }

    // Diagonal rescaling w = S v puts every decision variable on a unit scale; the raw
    // weights span many orders of magnitude on the overtake.
    const Vec s = prob.H.diagonal().cwiseSqrt().cwiseInverse();
    qp::QuadraticProgram scaled;
    scaled.H = s.asDiagonal() * prob.H * s.asDiagonal();
    scaled.c = s.cwiseProduct(prob.c);
    scaled.A = prob.A * s.asDiagonal();
    scaled.b = prob.b;
    scaled.lb = prob.lb.cwiseQuotient(s);
    scaled.ub = prob.ub.cwiseQuotient(s);
    for (int r = 0; r < scaled.rows(); ++r) {
        const double nrm = scaled.A.row(r).norm();
        if (nrm > 0.0) {
            scaled.A.row(r) /= nrm;
            scaled.b(r) /= nrm;
        }
    }

    const qp::QPSolution sol = qp::solve(scaled);
    out.status = sol.status;
    if (sol.status == qp::Status::optimal) {
        const Vec w = s.cwiseProduct(sol.w_star);
        out.u = w.head(m);
        out.slacks = w.tail(1 + q);
        for (int i = 0; i < q; ++i)
            if (out.slacks(1 + i) >= weights_.delta_max * (1.0 - 1e-9)) ++delta_cap_hits_;
    } else {
        out.u = Vec::Zero(m);
        out.slacks = Vec::Constant(1 + q, std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

sim::SimulationResult Scenario::run() {
    return sim::simulate(plant, x0, *controller, estimator.get(), options);
}

// ---------------------------------------------------------------------------
// Shoot the gap

estimator::EstimatorConfig GapConfig::default_estimator() {
    estimator::EstimatorConfig c;
    c.law = estimator::Law::fixed_time;
    c.gains.c1e = 50.0;
    c.gains.c2e = 50.0;
    c.gains.mu_e = 5.0;
    c.gains.sigma = 1e-4;
    c.k_e = 0.001;
    c.ell_e = 100.0;
    return c;
}

Mat gap_regressor(const GapConfig& cfg, const Vec& z) {
    const double s = std::sin(2.0 * kPi * cfg.f1 * z(0));
    const double c = std::cos(2.0 * kPi * cfg.f2 * z(1));
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = cfg.K_delta * (1.0 + s * s);
    D(1, 1) = cfg.K_delta * (1.0 + c * c);
    return D;
}

sim::PlantModel gap_plant(const GapConfig& cfg) {
    sim::PlantModel pm;
    auto& k = pm.known;
    k.n = 2;
    k.m = 2;
    k.p = 2;
    k.f = [](const Vec&) { return Vec::Zero(2).eval(); };
    k.g = [](const Vec&) { return Mat::Identity(2, 2).eval(); };
    k.delta = [cfg](const Vec& z) { return gap_regressor(cfg, z); };
    k.theta_box = ParameterBox::symmetric(cfg.theta_center, cfg.theta_bar);
    k.u_lower = -(Vec(2) << cfg.u_bar1, cfg.u_bar2).finished();
    k.u_upper = (Vec(2) << cfg.u_bar1, cfg.u_bar2).finished();
    pm.theta_true = cfg.theta_true;
    pm.validate();
    return pm;
}

std::vector<safety::BarrierFunction> gap_barriers(const GapConfig& cfg) {
    std::vector<safety::BarrierFunction> out;
    const double a2 = cfg.a * cfg.a;
    const double b2 = cfg.b * cfg.b;
    const std::array<std::pair<double, double>, 2> centers = {{{cfg.x1, cfg.y1}, {cfg.x2, cfg.y2}}};
    for (int i = 0; i < 2; ++i) {
        const double cx = centers[i].first;
        const double cy = centers[i].second;
        safety::BarrierFunction bf;
        bf.label = "obstacle_" + std::to_string(i + 1);
        bf.h = [=](const Vec& z) {
            const double dx = z(0) - cx, dy = z(1) - cy;
            return dx * dx / a2 + dy * dy / b2 - 1.0;
        };
        bf.grad_h = [=](const Vec& z) {
            return (Vec(2) << 2.0 * (z(0) - cx) / a2, 2.0 * (z(1) - cy) / b2).finished();
        };
        bf.uncertain = true;
        out.push_back(std::move(bf));
    }
    return out;
}

safety::LyapunovFunction gap_clf(const GapConfig& cfg) {
    const double K = cfg.K_V;
    return safety::LyapunovFunction::fixed_time([K](const Vec& z) { return K * z.squaredNorm(); },
                                                [K](const Vec& z) { return (2.0 * K * z).eval(); }, cfg.T,
                                                cfg.mu);
}

namespace {

class GapController final : public ClfCbfController {
public:
    GapController(const GapConfig& cfg, sim::KnownModel model, std::optional<Vec> known)
        : ClfCbfController(std::move(model), gap_barriers(cfg),
                           QpWeights{cfg.Q, cfg.p0, (Vec(2) << cfg.p1, cfg.p2).finished()}, std::move(known)),
          clf_(gap_clf(cfg)) {}

protected:
    Objective objective(double, const Vec&) override { return {clf_, 0}; }

private:
    safety::LyapunovFunction clf_;
};

estimator::EstimatorConfig estimator_for(ControllerKind kind, estimator::EstimatorConfig base, int p,
                                         double gamma) {
    if (base.gains.Gamma.rows() != p) base.gains.Gamma = gamma * Mat::Identity(p, p);
    if (kind == ControllerKind::robust_baseline) base.law = estimator::Law::frozen;
    return base;
}

}  // namespace

Scenario build_gap(const GapConfig& cfg, ControllerKind kind) {
    if (cfg.x0.size() != 2) throw ConfigError("gap: x0 must have two entries");
    Scenario sc;
    sc.id = "gap";
    sc.kind = kind;
    sc.plant = gap_plant(cfg);
    sc.x0 = cfg.x0;
    const auto barriers = gap_barriers(cfg);
    for (const auto& b : barriers) {
        if (b.h(cfg.x0) < 0.0) throw ConfigError("gap: initial state inside " + b.label);
        sc.barrier_labels.push_back(b.label);
    }

    auto est_cfg = estimator_for(kind, cfg.estimator, 2, cfg.gamma);
    est_cfg.gains.vartheta = sc.plant.known.theta_box.diameter_inf();
    est_cfg.gains.validate();
    Vec th0 = cfg.theta_hat0.size() == 2 ? cfg.theta_hat0 : sc.plant.known.theta_box.center();
    if (kind == ControllerKind::robust_baseline) th0 = sc.plant.known.theta_box.center();
    sc.estimator = std::make_unique<estimator::AdaptiveEstimator>(2, 2, est_cfg, sc.plant.known.theta_box, th0);

    std::optional<Vec> known;
    if (kind == ControllerKind::certainty_equivalent) known = cfg.theta_true;
    sc.controller = std::make_unique<GapController>(cfg, sc.plant.known, known);

    sc.options.t_final = cfg.t_final;
    sc.options.dt = cfg.dt;
    return sc;
}

double gap_completion_time(const sim::SimulationTrace& trace, double radius) {
    for (std::size_t k = 0; k < trace.size(); ++k)
        if (trace.states[k].norm() <= radius) return trace.times[k];
    return kInf;
}

bool passed_through_gap(const GapConfig& cfg, const sim::SimulationTrace& trace) {
    // Going around either ellipse crosses x = x1 far from the pinch between the tips.
    const double y_lo = cfg.y1 + cfg.b;
    const double y_hi = cfg.y2 - cfg.b;
    for (std::size_t k = 1; k < trace.size(); ++k) {
        const Vec& a = trace.states[k - 1];
        const Vec& b = trace.states[k];
        if ((a(0) - cfg.x1) * (b(0) - cfg.x1) > 0.0) continue;
        const double y = 0.5 * (a(1) + b(1));
        if (y >= y_lo - cfg.a && y <= y_hi + cfg.a) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Highway overtake

namespace {

enum : int { XE = 0, YE, TE, VE, XL, YL, TL, VL };

struct Edges {
    double E_R, E_L;
    double dER_dth, dER_dv, dEL_dth, dEL_dv;
};

Edges road_edges(const OvertakeConfig& c, double th, double v) {
    const double w = c.omega_bar;
    const double A = c.a_bar / c.M;
    const double s = std::sin(th), co = std::cos(th);
    const double k = th * th / (2.0 * w * w);
    Edges e{};
    e.E_R = c.e_r + th * v * s / w - k * (A * s + v * w * co);
    e.E_L = c.e_l - th * v * s / w - k * (A * s - v * w * co);
    e.dER_dth = v * (s + th * co) / w - th / (w * w) * (A * s + v * w * co) - k * (A * co - v * w * s);
    e.dER_dv = th * s / w - k * w * co;
    e.dEL_dth = -v * (s + th * co) / w - th / (w * w) * (A * s - v * w * co) - k * (A * co + v * w * s);
    e.dEL_dv = -th * s / w + k * w * co;
    return e;
}

}  // namespace

Vec bicycle_rate(const OvertakeConfig& cfg, const Vec& z, const Vec& u) {
    Vec r(4);
    r << z(3) * std::cos(z(2)), z(3) * std::sin(z(2)), u(0), u(1) / cfg.M;
    return r;
}

double margin_sx(const OvertakeConfig& cfg, double v, double heading) {
    return cfg.tau * v * std::cos(heading) + cfg.l_c;
}

sim::PlantModel overtake_plant(const OvertakeConfig& cfg) {
    if (cfg.ego0.size() != 4 || cfg.lead0.size() != 4) throw ConfigError("overtake: vehicle states have 4 entries");
    sim::PlantModel pm;
    auto& k = pm.known;
    k.n = 8;
    k.m = 2;
    k.p = 2;
    k.f = [](const Vec& z) {
        Vec f = Vec::Zero(8);
        f(XE) = z(VE) * std::cos(z(TE));
        f(YE) = z(VE) * std::sin(z(TE));
        f(XL) = z(VL) * std::cos(z(TL));
        f(YL) = z(VL) * std::sin(z(TL));
        return f;
    };
    const double M = cfg.M;
    k.g = [M](const Vec&) {
        Mat g = Mat::Zero(8, 2);
        g(TE, 0) = 1.0;
        g(VE, 1) = 1.0 / M;
        return g;
    };
    const double f1 = cfg.f_l1, f2 = cfg.f_l2;
    k.delta = [f1, f2](const Vec& z) {
        Mat D = Mat::Zero(8, 2);
        D(XL, 0) = 1.0 + 0.5 * (1.0 - std::cos(2.0 * kPi * f1 * z(XL)));
        D(YL, 1) = 0.1 + 0.05 * (1.0 - std::sin(2.0 * kPi * f2 * z(XL)));
        return D;
    };
    k.theta_box = ParameterBox::symmetric(Vec::Zero(2), cfg.theta_bar);
    k.u_lower = -(Vec(2) << cfg.omega_bar, cfg.a_bar).finished();
    k.u_upper = (Vec(2) << cfg.omega_bar, cfg.a_bar).finished();
    pm.theta_true = cfg.theta_true;
    pm.validate();
    return pm;
}

std::vector<safety::BarrierFunction> overtake_barriers(const OvertakeConfig& cfg) {
    std::vector<safety::BarrierFunction> out(3);

    out[0].label = "road";
    out[0].uncertain = false;
    out[0].h = [cfg](const Vec& z) {
        const Edges e = road_edges(cfg, z(TE), z(VE));
        return cfg.K_s * (z(YE) - e.E_R) * (e.E_L - z(YE));
    };
    out[0].grad_h = [cfg](const Vec& z) {
        const Edges e = road_edges(cfg, z(TE), z(VE));
        const double lo = z(YE) - e.E_R, hi = e.E_L - z(YE);
        Vec g = Vec::Zero(8);
        g(YE) = cfg.K_s * (hi - lo);
        g(TE) = cfg.K_s * (-e.dER_dth * hi + lo * e.dEL_dth);
        g(VE) = cfg.K_s * (-e.dER_dv * hi + lo * e.dEL_dv);
        return g;
    };

    out[1].label = "speed";
    out[1].uncertain = false;
    out[1].h = [L = cfg.L](const Vec& z) { return L - z(VE); };
    out[1].grad_h = [](const Vec&) {
        Vec g = Vec::Zero(8);
        g(VE) = -1.0;
        return g;
    };

    out[2].label = "vehicle";
    out[2].uncertain = true;
    out[2].h = [cfg](const Vec& z) {
        const double sx = margin_sx(cfg, z(VE), z(TE));
        const double sy = cfg.w_c + cfg.s_y_pad;
        const double dx = (z(XE) - z(XL)) / sx, dy = (z(YE) - z(YL)) / sy;
        return dx * dx + dy * dy - 1.0;
    };
    out[2].grad_h = [cfg](const Vec& z) {
        const double sx = margin_sx(cfg, z(VE), z(TE));
        const double sy = cfg.w_c + cfg.s_y_pad;
        const double dx = z(XE) - z(XL), dy = z(YE) - z(YL);
        const double dh_dsx = -2.0 * dx * dx / (sx * sx * sx);
        Vec g = Vec::Zero(8);
        g(XE) = 2.0 * dx / (sx * sx);
        g(XL) = -g(XE);
        g(YE) = 2.0 * dy / (sy * sy);
        g(YL) = -g(YE);
        g(TE) = dh_dsx * (-cfg.tau * z(VE) * std::sin(z(TE)));
        g(VE) = dh_dsx * (cfg.tau * std::cos(z(TE)));
        return g;
    };
    return out;
}

namespace {

struct PhaseTarget {
    bool track_x = false;
    double x_offset = 0.0;  ///< relative to the lead
    double y_d = 0.0;
    double v_d = 0.0;
};

PhaseTarget phase_target(const OvertakeConfig& c, int phase) {
    switch (phase) {
        case 1: return {false, 0.0, c.lane_right, c.approach_speed};
        case 2: return {false, 0.0, c.lane_left, c.pass_speed};
        case 3: return {true, c.pass_offset, c.lane_left, c.pass_speed};
        default: return {false, 0.0, c.lane_right, c.return_speed};
    }
}

}  // namespace

Vec overtake_target(const OvertakeConfig& cfg, int phase, const Vec& z) {
    const PhaseTarget pt = phase_target(cfg, phase);
    const double th_max = cfg.heading_max;
    Vec zd(4);
    zd(0) = pt.track_x ? z(XL) + pt.x_offset : std::numeric_limits<double>::quiet_NaN();
    zd(1) = pt.y_d;
    zd(2) = th_max * std::tanh(cfg.heading_gain * (pt.y_d - z(YE)) / th_max);
    zd(3) = pt.v_d;
    return zd;
}

safety::LyapunovFunction overtake_clf(const OvertakeConfig& cfg, int phase) {
    const int ph = std::clamp(phase, 1, 4);
    const PhaseTarget pt = phase_target(cfg, ph);
    const OvertakeConfig c = cfg;
    auto errors = [c, pt](const Vec& z, double& xb, double& yb, double& tb, double& vb, double& dthd_dy) {
        xb = pt.track_x ? z(XE) - z(XL) - pt.x_offset : 0.0;
        yb = z(YE) - pt.y_d;
        const double arg = c.heading_gain * (pt.y_d - z(YE)) / c.heading_max;
        const double th_d = c.heading_max * std::tanh(arg);
        const double sech = 1.0 / std::cosh(arg);
        dthd_dy = -c.heading_gain * sech * sech;
        tb = z(TE) - th_d;
        vb = z(VE) - pt.v_d;
    };
    auto V = [c, errors](const Vec& z) {
        double xb, yb, tb, vb, d;
        errors(z, xb, yb, tb, vb, d);
        return c.K_V * (c.k_x * xb * xb + c.k_y * yb * yb + c.k_theta * tb * tb + c.k_v * vb * vb - 1.0);
    };
    auto grad = [c, errors](const Vec& z) {
        double xb, yb, tb, vb, d;
        errors(z, xb, yb, tb, vb, d);
        Vec g = Vec::Zero(8);
        g(XE) = 2.0 * c.K_V * c.k_x * xb;
        g(XL) = -g(XE);
        g(YE) = 2.0 * c.K_V * (c.k_y * yb - c.k_theta * tb * d);
        g(TE) = 2.0 * c.K_V * c.k_theta * tb;
        g(VE) = 2.0 * c.K_V * c.k_v * vb;
        return g;
    };
    return safety::LyapunovFunction::fixed_time(V, grad, cfg.phase_T[ph - 1], cfg.mu);
}

PhaseState phase_manager(const OvertakeConfig& cfg, const PhaseState& phase, const Vec& z, double t) {
    PhaseState next = phase;
    while (next.index <= 4) {
        bool goal = overtake_clf(cfg, next.index).V(z) <= 0.0;
        if (next.index == 4) goal = goal && z(XE) > z(XL);
        const bool late = next.index <= 2 && t >= next.deadline;
        if (!goal && !late) break;
        ++next.index;
        next.entry_time = t;
        next.deadline = next.index <= 4 ? t + cfg.phase_T[next.index - 1] : kInf;
    }
    next.z_d = overtake_target(cfg, std::min(next.index, 4), z);
    return next;
}

namespace {

class OvertakeController final : public ClfCbfController {
public:
    OvertakeController(const OvertakeConfig& cfg, sim::KnownModel model, std::optional<Vec> known)
        : ClfCbfController(std::move(model), overtake_barriers(cfg),
                           QpWeights{(Vec(2) << 1.0 / (cfg.omega_bar * cfg.omega_bar), 1.0 / (cfg.a_bar * cfg.a_bar))
                                         .finished()
                                         .asDiagonal(),
                                     cfg.p0, (Vec(3) << cfg.p[0], cfg.p[1], cfg.p[2]).finished()},
                           std::move(known)),
          cfg_(cfg) {
        phase_.index = 1;
        phase_.entry_time = 0.0;
        phase_.deadline = cfg.phase_T[0];
        for (int k = 1; k <= 4; ++k) clfs_[k - 1] = overtake_clf(cfg, k);
    }

protected:
    Objective objective(double t, const Vec& x) override {
        phase_ = phase_manager(cfg_, phase_, x, t);
        return {clfs_[std::min(phase_.index, 4) - 1], phase_.index};
    }

private:
    OvertakeConfig cfg_;
    PhaseState phase_;
    std::array<safety::LyapunovFunction, 4> clfs_;
};

}  // namespace

Scenario build_overtake(const OvertakeConfig& cfg, ControllerKind kind) {
    Scenario sc;
    sc.id = "overtake";
    sc.kind = kind;
    sc.plant = overtake_plant(cfg);
    sc.x0 = Vec(8);
    sc.x0 << cfg.ego0, cfg.lead0;
    const auto barriers = overtake_barriers(cfg);
    for (const auto& b : barriers) {
        if (b.h(sc.x0) < 0.0) throw ConfigError("overtake: initial state violates " + b.label);
        sc.barrier_labels.push_back(b.label);
    }

    auto est_cfg = estimator_for(kind, cfg.estimator, 2, cfg.gamma);
    est_cfg.gains.vartheta = sc.plant.known.theta_box.diameter_inf();
    est_cfg.gains.validate();
    Vec th0 = cfg.theta_hat0.size() == 2 ? cfg.theta_hat0 : sc.plant.known.theta_box.center();
    if (kind == ControllerKind::robust_baseline) th0 = sc.plant.known.theta_box.center();
    sc.estimator = std::make_unique<estimator::AdaptiveEstimator>(8, 2, est_cfg, sc.plant.known.theta_box, th0);

    std::optional<Vec> known;
    if (kind == ControllerKind::certainty_equivalent) known = cfg.theta_true;
    sc.controller = std::make_unique<OvertakeController>(cfg, sc.plant.known, known);

    sc.options.t_final = cfg.t_final;
    sc.options.dt = cfg.dt;
    return sc;
}

std::string to_string(Decision d) {
    switch (d) {
        case Decision::go_now: return "go-now";
        case Decision::go_after_one: return "go-after-1";
        case Decision::no_go: return "no-go";
    }
    return "unknown";
}

Decision overtake_decision(double T_controller, double first_arrival, double spacing) {
    if (!(T_controller > 0.0)) throw std::invalid_argument("overtake_decision: T must be positive");
    if (T_controller <= first_arrival) return Decision::go_now;
    if (T_controller <= spacing) return Decision::go_after_one;
    return Decision::no_go;
}

double overtake_completion_time(const sim::SimulationTrace& trace) {
    for (std::size_t k = 0; k < trace.size(); ++k)
        if (trace.modes[k] >= 5) return trace.times[k];
    return kInf;
}

}  // namespace fxtsafe::scenarios
