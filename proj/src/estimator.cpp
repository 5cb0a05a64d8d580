#include "fxtsafe/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace fxtsafe::estimator {

FilterBank FilterBank::zeros(int n, int p, double k_e)
{
    return {k_e, Vec::Zero(n), Vec::Zero(n), Vec::Zero(n), Vec::Zero(n), Mat::Zero(n, p), Mat::Zero(n, p)};
}

FilterRates filter_rates(const FilterBank& bank, const Vec& x, const Vec& phi, const Mat& Phi)
{
    const double k = bank.k_e;
    const double k2 = k * k;
    return {
        bank.xdot_f,
        (x - bank.x_f - 2.0 * k * bank.xdot_f) / k2,
        bank.phidot_f,
        (phi - bank.phi_f - 2.0 * k * bank.phidot_f) / k2,
        bank.Phidot_f,
        (Phi - bank.Phi_f - 2.0 * k * bank.Phidot_f) / k2,
    };
}

AuxiliaryMemory AuxiliaryMemory::zeros(int p, double ell_e)
{
    return {ell_e, Mat::Zero(p, p), Vec::Zero(p)};
}

AuxRates aux_rates(const AuxiliaryMemory& aux, const FilterBank& bank)
{
    const Mat PhiT = bank.Phi_f.transpose();
    return {
        -aux.ell_e * aux.P + PhiT * bank.Phi_f,
        -aux.ell_e * aux.Q + PhiT * (bank.xdot_f - bank.phi_f),
    };
}

Vec compute_W(const AuxiliaryMemory& aux, const Vec& theta_hat)
{
    return aux.P * theta_hat - aux.Q;
}

void AdaptationGains::validate() const
{
    if (Gamma.rows() != Gamma.cols() || Gamma.rows() == 0) {
        throw ConfigError("Gamma must be square and non-empty");
    }
    const Mat off = Gamma - Mat(Gamma.diagonal().asDiagonal());
    if (off.lpNorm<Eigen::Infinity>() > 0.0 || (Gamma.diagonal().array() <= 0.0).any()) {
        throw ConfigError("Gamma must be diagonal with positive entries");
    }
    if (!(c1e > 0.0) || !(c2e > 0.0)) {
        throw ConfigError("c1e and c2e must be positive");
    }
    if (!(mu_e > 1.0)) {
        throw ConfigError("mu_e must exceed 1");
    }
    if (!(sigma > 0.0) || vartheta < 0.0) {
        throw ConfigError("sigma must be positive and vartheta nonnegative");
    }
}

double lambda_min_sym(const Mat& P)
{
    if (P.rows() == 1) {
        return P(0, 0);
    }
    if (P.rows() == 2) {
        const double a = P(0, 0);
        const double d = P(1, 1);
        const double b = 0.5 * (P(0, 1) + P(1, 0));
        const double half = 0.5 * (a - d);
        return 0.5 * (a + d) - std::sqrt(half * half + b * b);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

namespace {

double condition_number(const Mat& P)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(es.eigenvalues().size() - 1);
    if (!(lo > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return hi / lo;
}

Vec solve_P(const Mat& P, const Vec& W)
{
    if (condition_number(P) > kMaxCondition) {
        throw EstimatorSingularity("auxiliary matrix P is ill-conditioned");
    }
    return P.ldlt().solve(W);
}

}  // namespace

double nu(const Mat& P, const Vec& W, const Mat& Gamma)
{
    const Vec PinvW = solve_P(P, W);
    const Vec Ginv = Gamma.diagonal().cwiseInverse();
    return 0.5 * PinvW.dot(Ginv.cwiseProduct(PinvW));
}

Vec fxts_rate(const Mat& P, const Vec& W, const AdaptationGains& gains)
{
    if (W.norm() <= kDeadZone) {
        return Vec::Zero(W.size());
    }
    // P is symmetric, so P^-T W = P^-1 W.
    const Vec PinvW = solve_P(P, W);
    const Vec Ginv = gains.Gamma.diagonal().cwiseInverse();
    const double v = 0.5 * PinvW.dot(Ginv.cwiseProduct(PinvW));
    const double denom = W.dot(PinvW);
    const double drive = -gains.c1e * std::pow(v, gains.gamma1()) - gains.c2e * std::pow(v, gains.gamma2());
    return gains.Gamma * W * (drive / denom);
}

Vec ft_rate(const Mat& P, const Vec& W, const AdaptationGains& gains)
{
    const double norm = W.norm();
    if (norm <= kDeadZone) {
        return Vec::Zero(W.size());
    }
    if (condition_number(P) > kMaxCondition) {
        throw EstimatorSingularity("auxiliary matrix P is ill-conditioned");
    }
    return -gains.Gamma * P.transpose() * W / norm;
}

namespace {

struct EnvelopeTerms {
    double M;
    double N;
    double Xi;
};

EnvelopeTerms envelope_terms(const AdaptationGains& gains, double eta0)
{
    const double trace_inv = gains.Gamma.diagonal().cwiseInverse().sum();
    const double V0 = 0.5 * eta0 * eta0 * trace_inv;
    const double N = std::sqrt(gains.c2e / gains.c1e);
    const double M = 2.0 * gains.Gamma.diagonal().maxCoeff();
    return {M, N, std::atan(N * std::pow(V0, 1.0 / gains.mu_e))};
}

}  // namespace

double eta(double t, const AdaptationGains& gains, double eta0)
{
    if (t < 0.0) {
        throw std::domain_error("eta: negative time");
    }
    const auto [M, N, Xi] = envelope_terms(gains, eta0);
    const double arg = Xi - N * (gains.c1e / gains.mu_e) * t;
    if (arg <= 0.0) {
        return 0.0;
    }
    return std::sqrt(M * std::pow(std::tan(arg) / N, gains.mu_e));
}

double eta_dot(double t, const AdaptationGains& gains, double eta0)
{
    if (t < 0.0) {
        throw std::domain_error("eta_dot: negative time");
    }
    const auto [M, N, Xi] = envelope_terms(gains, eta0);
    const double arg = Xi - N * (gains.c1e / gains.mu_e) * t;
    if (arg <= 0.0) {
        return 0.0;
    }
    const double mu = gains.mu_e;
    const double sec = 1.0 / std::cos(arg);
    return -0.5 * gains.c1e * std::sqrt(M) * std::pow(N, 1.0 - 0.5 * mu)
           * std::pow(std::tan(arg), 0.5 * mu - 1.0) * sec * sec;
}

SettlingBounds settling_bounds(const AdaptationGains& gains)
{
    const double T_b = 1.0 / (gains.c1e * (1.0 - gains.gamma1())) + 1.0 / (gains.c2e * (gains.gamma2() - 1.0));
    const auto terms = envelope_terms(gains, gains.vartheta);
    return {T_b, gains.mu_e * terms.Xi / std::sqrt(gains.c1e * gains.c2e)};
}

bool check_activation(EstimatorState& state, double t)
{
    if (!state.activated && lambda_min_sym(state.aux.P) >= state.gains.sigma) {
        state.activated = true;
        state.t_activate = t;
    }
    return state.activated;
}

AdaptiveEstimator::AdaptiveEstimator(int n, int p, EstimatorConfig config, ParameterBox box, Vec theta_hat0)
    : n_(n), p_(p), config_(std::move(config)), box_(std::move(box)), x_ref_(Vec::Zero(n))
{
    if (box_.size() != p || theta_hat0.size() != p || !box_.valid()) {
        throw ConfigError("estimator: parameter box and initial estimate must have dimension p");
    }
    config_.gains.validate();
    if (config_.gains.Gamma.rows() != p) {
        throw ConfigError("estimator: Gamma must be p x p");
    }
    if (!(config_.k_e > 0.0) || !(config_.ell_e > 0.0) || !(config_.euler_substep > 0.0)) {
        throw ConfigError("estimator: k_e, ell_e and euler_substep must be positive");
    }
    state_.filter = FilterBank::zeros(n, p, config_.k_e);
    state_.aux = AuxiliaryMemory::zeros(p, config_.ell_e);
    state_.theta_hat = project_box(theta_hat0, box_);
    state_.gains = config_.gains;
}

int AdaptiveEstimator::smooth_size() const
{
    return 4 * n_ + 2 * n_ * p_ + p_ * p_ + p_;
}

Vec AdaptiveEstimator::pack() const
{
    Vec y(smooth_size());
    const auto& fb = state_.filter;
    const int np = n_ * p_;
    int o = 0;
    y.segment(o, n_) = fb.x_f;        o += n_;
    y.segment(o, n_) = fb.xdot_f;     o += n_;
    y.segment(o, n_) = fb.phi_f;      o += n_;
    y.segment(o, n_) = fb.phidot_f;   o += n_;
    y.segment(o, np) = fb.Phi_f.reshaped();    o += np;
    y.segment(o, np) = fb.Phidot_f.reshaped(); o += np;
    y.segment(o, p_ * p_) = state_.aux.P.reshaped(); o += p_ * p_;
    y.segment(o, p_) = state_.aux.Q;
    return y;
}

void AdaptiveEstimator::unpack(const Eigen::Ref<const Vec>& y)
{
    auto& fb = state_.filter;
    const int np = n_ * p_;
    int o = 0;
    fb.x_f = y.segment(o, n_);      o += n_;
    fb.xdot_f = y.segment(o, n_);   o += n_;
    fb.phi_f = y.segment(o, n_);    o += n_;
    fb.phidot_f = y.segment(o, n_); o += n_;
    fb.Phi_f = y.segment(o, np).reshaped(n_, p_);    o += np;
    fb.Phidot_f = y.segment(o, np).reshaped(n_, p_); o += np;
    state_.aux.P = y.segment(o, p_ * p_).reshaped(p_, p_); o += p_ * p_;
    state_.aux.Q = y.segment(o, p_);
}

Vec AdaptiveEstimator::smooth_rates(const Eigen::Ref<const Vec>& y, const Vec& x, const Vec& phi, const Mat& Phi) const
{
    const int np = n_ * p_;
    FilterBank fb{config_.k_e,
                  y.segment(0, n_), y.segment(n_, n_), y.segment(2 * n_, n_), y.segment(3 * n_, n_),
                  y.segment(4 * n_, np).reshaped(n_, p_), y.segment(4 * n_ + np, np).reshaped(n_, p_)};
    const int o = 4 * n_ + 2 * np;
    AuxiliaryMemory aux{config_.ell_e, y.segment(o, p_ * p_).reshaped(p_, p_), y.segment(o + p_ * p_, p_)};

    const auto fr = filter_rates(fb, x - x_ref_, phi, Phi);
    const auto ar = aux_rates(aux, fb);

    Vec dy(smooth_size());
    int k = 0;
    dy.segment(k, n_) = fr.x_f;      k += n_;
    dy.segment(k, n_) = fr.xdot_f;   k += n_;
    dy.segment(k, n_) = fr.phi_f;    k += n_;
    dy.segment(k, n_) = fr.phidot_f; k += n_;
    dy.segment(k, np) = fr.Phi_f.reshaped();    k += np;
    dy.segment(k, np) = fr.Phidot_f.reshaped(); k += np;
    dy.segment(k, p_ * p_) = ar.P.reshaped();   k += p_ * p_;
    dy.segment(k, p_) = ar.Q;
    return dy;
}

void AdaptiveEstimator::update_estimate(double t, double dt)
{
    if (config_.law == Law::frozen) {
        return;
    }
    const bool was_active = state_.activated;
    if (!check_activation(state_, t) || !was_active) {
        return;
    }
    const int steps = std::max(1, static_cast<int>(std::ceil(dt / config_.euler_substep - 1e-9)));
    const double h = dt / steps;
    const Mat P = 0.5 * (state_.aux.P + state_.aux.P.transpose());
    for (int i = 0; i < steps; ++i) {
        const Vec W = P * state_.theta_hat - state_.aux.Q;
        Vec rate;
        try {
            rate = config_.law == Law::fixed_time ? fxts_rate(P, W, state_.gains) : ft_rate(P, W, state_.gains);
        } catch (const EstimatorSingularity&) {
            ++singular_events_;
            return;
        }
        const double peak = rate.lpNorm<Eigen::Infinity>();
        if (peak > config_.max_rate) {
            rate *= config_.max_rate / peak;
            ++clamp_events_;
        }
        state_.theta_hat = project_box(state_.theta_hat + h * rate, box_);
    }
}

EstimatorView AdaptiveEstimator::view(double t) const
{
    EstimatorView v{state_.theta_hat, state_.gains.vartheta, 0.0, state_.activated, state_.gains.Gamma, box_};
    if (config_.law != Law::fixed_time || !state_.activated) {
        return v;
    }
    const double tau = std::max(0.0, t - state_.t_activate);
    const double bound = eta(tau, state_.gains, state_.gains.vartheta);
    if (bound < state_.gains.vartheta) {
        v.eta = bound;
        v.eta_dot = eta_dot(tau, state_.gains, state_.gains.vartheta);
    }
    return v;
}

}  // namespace fxtsafe::estimator
