#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fxtsafe/estimator.hpp"
#include "fxtsafe/qp.hpp"
#include "fxtsafe/types.hpp"

namespace fxtsafe::sim {

/// The part of the plant a controller or estimator is allowed to know.
struct KnownModel {
    int n = 0;
    int m = 0;
    int p = 0;
    std::function<Vec(const Vec&)> f;
    std::function<Mat(const Vec&)> g;
    std::function<Mat(const Vec&)> delta;
    ParameterBox theta_box;
    Vec u_lower;
    Vec u_upper;
};

/// Control-affine plant xdot = f(x) + g(x) u + Delta(x) theta.
struct PlantModel {
    KnownModel known;
    Vec theta_true;  ///< read only by the simulator and by test oracles

    /// Throws ConfigError when dimensions disagree or theta_true lies outside the box.
    void validate() const;
};

inline constexpr double kDivergenceThreshold = 1e9;

/// f(x) + g(x) u + Delta(x) theta_true. Throws SimulationDivergence on non-finite output.
Vec eval_dynamics(const PlantModel& model, const Vec& x, const Vec& u, double t = 0.0);

using RateFn = std::function<Vec(double, const Vec&)>;

/// Classical RK4 step. Throws SimulationDivergence on a non-finite stage.
Vec rk4_step(const RateFn& rate, double t, const Vec& y, double dt);

struct ControlContext {
    double t;
    const Vec& x;
    const estimator::EstimatorView& estimate;
};

struct ControlOutput {
    Vec u;
    qp::Status status = qp::Status::optimal;
    Vec slacks;   ///< delta_0..delta_q
    Vec h;        ///< barrier values
    Vec h_r;      ///< shrunken barrier values
    double V = 0.0;
    int mode = 0; ///< controller-specific label, e.g. overtake phase
};

class Controller {
public:
    virtual ~Controller() = default;
    virtual int barrier_count() const = 0;
    virtual ControlOutput compute(const ControlContext& ctx) = 0;
};

enum class InfeasiblePolicy { hold, abort };

struct SimOptions {
    double t_final = 1.0;
    double dt = 1e-3;
    InfeasiblePolicy infeasible_policy = InfeasiblePolicy::hold;
};

struct SimulationTrace {
    int n = 0, m = 0, p = 0, q = 0;
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> controls;
    std::vector<Vec> estimates;
    std::vector<double> envelope;
    std::vector<Vec> barrier_values;
    std::vector<Vec> shrunken_values;
    std::vector<double> lyapunov_values;
    std::vector<qp::Status> qp_statuses;
    std::vector<Vec> slacks;
    std::vector<int> modes;

    // Estimator internals, one entry per row when an estimator is attached.
    std::vector<Mat> aux_P;
    std::vector<Vec> aux_Q;
    std::vector<Vec> filter_xdot_minus_phi;  ///< xdot_f - phi_f
    std::vector<Mat> filter_Phi;             ///< Phi_f
    std::vector<char> activated;

    bool estimator_activated = false;
    double t_activate = 0.0;

    std::size_t size() const { return times.size(); }
};

enum class Outcome { completed, diverged, aborted_infeasible };

struct SimulationResult {
    SimulationTrace trace;
    Outcome outcome = Outcome::completed;
    double stop_time = 0.0;
    std::string message;
    int infeasible_steps = 0;
    int rate_clamps = 0;
};

/// Closed-loop run. Each step: solve the controller on (t, x, estimate), integrate plant,
/// filters and P, Q together with RK4 under zero-order-hold control, then advance the estimate.
/// The estimator may be null for plants without adaptation.
SimulationResult simulate(const PlantModel& model, const Vec& x0, Controller& controller,
                          estimator::AdaptiveEstimator* estimator, const SimOptions& options);

}  // namespace fxtsafe::sim
