#pragma once

#include <optional>

#include "fxtsafe/types.hpp"

namespace fxtsafe::estimator {

/// Critically damped second-order low-pass bank for x, phi = f + g u and Phi = Delta.
/// Each channel obeys k^2 b'' + 2k b' + b = input with zero initial conditions.
struct FilterBank {
    double k_e = 0.001;
    Vec x_f, xdot_f;
    Vec phi_f, phidot_f;
    Mat Phi_f, Phidot_f;

    static FilterBank zeros(int n, int p, double k_e);
};

/// Time derivative of every filter state.
struct FilterRates {
    Vec x_f, xdot_f;
    Vec phi_f, phidot_f;
    Mat Phi_f, Phidot_f;
};

FilterRates filter_rates(const FilterBank& bank, const Vec& x, const Vec& phi, const Mat& Phi);

/// Exponentially forgotten regressor integrals, Q = P theta along any trajectory.
struct AuxiliaryMemory {
    double ell_e = 100.0;
    Mat P;
    Vec Q;

    static AuxiliaryMemory zeros(int p, double ell_e);
};

struct AuxRates {
    Mat P;
    Vec Q;
};

AuxRates aux_rates(const AuxiliaryMemory& aux, const FilterBank& bank);

/// W = P theta_hat - Q.
Vec compute_W(const AuxiliaryMemory& aux, const Vec& theta_hat);

struct AdaptationGains {
    Mat Gamma;            ///< diagonal, positive
    double c1e = 50.0;
    double c2e = 50.0;
    double mu_e = 5.0;
    double sigma = 1e-4;  ///< activation threshold on lambda_min(P)
    double vartheta = 0.0;

    double gamma1() const { return 1.0 - 1.0 / mu_e; }
    double gamma2() const { return 1.0 + 1.0 / mu_e; }

    /// Throws ConfigError on non-diagonal/non-positive Gamma, nonpositive rates or mu_e <= 1.
    void validate() const;
};

inline constexpr double kDeadZone = 1e-10;
inline constexpr double kMaxCondition = 1e12;

/// nu = 0.5 W' P^-T Gamma^-1 P^-1 W.
double nu(const Mat& P, const Vec& W, const Mat& Gamma);

/// Fixed-time law: Gamma W (W' P^-T W)^-1 (-c1e nu^g1 - c2e nu^g2). Zero inside the dead zone.
/// Throws EstimatorSingularity when cond(P) exceeds kMaxCondition.
Vec fxts_rate(const Mat& P, const Vec& W, const AdaptationGains& gains);

/// Finite-time reference law: -Gamma P' W / ||W||. Zero inside the dead zone.
Vec ft_rate(const Mat& P, const Vec& W, const AdaptationGains& gains);

/// Closed-form bound on ||theta_tilde||_inf, t measured from activation.
/// Returns 0 once the tangent argument reaches zero. Throws std::domain_error for t < 0.
double eta(double t, const AdaptationGains& gains, double eta0);

/// Time derivative of eta (<= 0).
double eta_dot(double t, const AdaptationGains& gains, double eta0);

struct SettlingBounds {
    double T_b;      ///< 1/(c1e(1-g1)) + 1/(c2e(g2-1))
    double T_tight;  ///< mu_e Xi / sqrt(c1e c2e), root of the eta bracket
};

SettlingBounds settling_bounds(const AdaptationGains& gains);

/// Smallest eigenvalue of a symmetric matrix; closed form for 1x1 and 2x2.
double lambda_min_sym(const Mat& P);

enum class Law { fixed_time, finite_time, frozen };

/// What a controller may read from the estimator.
struct EstimatorView {
    Vec theta_hat;
    double eta = 0.0;      ///< current infinity-norm error bound
    double eta_dot = 0.0;
    bool activated = false;
    Mat Gamma;
    ParameterBox box;
};

struct EstimatorState {
    FilterBank filter;
    AuxiliaryMemory aux;
    Vec theta_hat;
    bool activated = false;
    double t_activate = 0.0;
    AdaptationGains gains;
};

/// Latches activation the first time lambda_min(P) >= sigma.
bool check_activation(EstimatorState& state, double t);

struct EstimatorConfig {
    Law law = Law::fixed_time;
    AdaptationGains gains;
    double k_e = 0.001;
    double ell_e = 100.0;
    double max_rate = 1e6;     ///< infinity-norm clamp on the adaptation rate
    double euler_substep = 1e-5;
};

/// Filters, auxiliary memory and the adaptation law for a plant with n states and p parameters.
///
/// The smooth states (filters, P, Q) are exposed as a flat vector so the simulator can
/// integrate them together with the plant. The estimate is advanced separately with
/// explicit Euler sub-steps on frozen P, Q, followed by box projection.
///
/// The x channel filters x - x(0), so the filtered identity xdot_f = phi_f + Phi_f theta holds
/// from t = 0 rather than after the initial-condition transient.
class AdaptiveEstimator {
public:
    AdaptiveEstimator(int n, int p, EstimatorConfig config, ParameterBox box, Vec theta_hat0);

    int n() const { return n_; }
    int p() const { return p_; }
    int smooth_size() const;

    void set_reference_state(const Vec& x0) { x_ref_ = x0; }

    Vec pack() const;
    void unpack(const Eigen::Ref<const Vec>& y);

    /// Rates of the smooth states given the plant signals at a stage.
    Vec smooth_rates(const Eigen::Ref<const Vec>& y, const Vec& x, const Vec& phi, const Mat& Phi) const;

    /// Activation check and estimate update over [t - dt, t]; P, Q must already be at t.
    void update_estimate(double t, double dt);

    EstimatorView view(double t) const;

    const EstimatorState& state() const { return state_; }
    const EstimatorConfig& config() const { return config_; }
    const ParameterBox& box() const { return box_; }
    int clamp_events() const { return clamp_events_; }
    int singular_events() const { return singular_events_; }

private:
    int n_;
    int p_;
    EstimatorConfig config_;
    ParameterBox box_;
    EstimatorState state_;
    Vec x_ref_;
    int clamp_events_ = 0;
    int singular_events_ = 0;
};

}  // namespace fxtsafe::estimator
