#pragma once

#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fxtsafe/estimator.hpp"
#include "fxtsafe/safety.hpp"
#include "fxtsafe/sim.hpp"

namespace fxtsafe::scenarios {

enum class ControllerKind { proposed, robust_baseline, certainty_equivalent };

std::string to_string(ControllerKind kind);
ControllerKind parse_controller_kind(const std::string& name);

/// Cost 0.5 u'Qu + p0 d0^2 + sum p_i d_i^2.
struct QpWeights {
    Mat Q;
    double p0 = 1.0;
    Vec p;
    double delta_max = 1e6;
};

/// Decision vector [u; delta_0; delta_1..delta_q] solved once per step.
///
/// Barrier rows use the robust-adaptive form with the estimator's bound, the CLF row the
/// worst-case decrease condition. With a known parameter vector the controller ignores the
/// estimator and collapses to the certainty-equivalent CLF-CBF-QP.
class ClfCbfController : public sim::Controller {
public:
    ClfCbfController(sim::KnownModel model, std::vector<safety::BarrierFunction> barriers, QpWeights weights,
                     std::optional<Vec> known_theta = std::nullopt);

    int barrier_count() const override { return static_cast<int>(barriers_.size()); }
    sim::ControlOutput compute(const sim::ControlContext& ctx) override;

    const std::vector<safety::BarrierFunction>& barriers() const { return barriers_; }
    int margin_violations() const { return margin_violations_; }
    int delta_cap_hits() const { return delta_cap_hits_; }

protected:
    struct Objective {
        safety::LyapunovFunction clf;
        int mode = 0;
    };
    /// The CLF in force at (t, x).
    virtual Objective objective(double t, const Vec& x) = 0;

    const sim::KnownModel& model() const { return model_; }

private:
    sim::KnownModel model_;
    std::vector<safety::BarrierFunction> barriers_;
    QpWeights weights_;
    std::optional<Vec> known_theta_;
    int margin_violations_ = 0;
    int delta_cap_hits_ = 0;
};

/// Runnable closed loop: plant, initial state, controller, estimator and options.
struct Scenario {
    std::string id;
    ControllerKind kind = ControllerKind::proposed;
    sim::PlantModel plant;
    Vec x0;
    std::unique_ptr<ClfCbfController> controller;
    std::unique_ptr<estimator::AdaptiveEstimator> estimator;
    sim::SimOptions options;
    std::vector<std::string> barrier_labels;

    sim::SimulationResult run();
};

// ---------------------------------------------------------------------------
// Shoot the gap

struct GapConfig {
    double K_delta = 0.833;
    double f1 = 1.0;
    double f2 = 4.0;
    Vec theta_true = (Vec(2) << -1.0, 1.0).finished();
    Vec theta_center = Vec::Zero(2);
    double theta_bar = 10.0;
    Vec theta_hat0;  ///< empty: box center

    double a = 1.0;
    double b = 4.99;
    double x1 = 1.0, y1 = -6.0;
    double x2 = 1.0, y2 = 4.0;

    double K_V = 1.0;
    double T = 4.0;
    double mu = 5.0;

    Mat Q = Mat::Identity(2, 2);
    double p0 = 50.0;
    double p1 = 5.0;
    double p2 = 5.0;
    double u_bar1 = 2.5;
    double u_bar2 = 2.5;

    Vec x0 = (Vec(2) << 2.5, -4.0).finished();
    double goal_radius = 0.1;

    estimator::EstimatorConfig estimator = default_estimator();
    double gamma = 1000.0;  ///< Gamma = gamma * I

    double t_final = 5.0;
    double dt = 1e-3;

    static estimator::EstimatorConfig default_estimator();
};

/// Regressor K_delta diag(1 + sin^2(2 pi f1 x), 1 + cos^2(2 pi f2 y)).
Mat gap_regressor(const GapConfig& cfg, const Vec& z);

sim::PlantModel gap_plant(const GapConfig& cfg);
std::vector<safety::BarrierFunction> gap_barriers(const GapConfig& cfg);
safety::LyapunovFunction gap_clf(const GapConfig& cfg);

/// Throws ConfigError when the initial state lies inside an obstacle.
Scenario build_gap(const GapConfig& cfg, ControllerKind kind);

// ---------------------------------------------------------------------------
// Highway overtake

/// Composite state [x_e y_e th_e v_e x_l y_l th_l v_l]; inputs (omega_e, a_e).
struct OvertakeConfig {
    double M = 1994.0;
    double l_c = 4.81;
    double w_c = 1.92;
    double s_y_pad = 0.75;
    double e_r = 0.0;
    double e_l = 6.0;
    double L = 30.0;
    double tau = 1.8;
    double omega_bar = 0.175;
    double a_bar = 4890.0;
    double f_l1 = 0.01;
    double f_l2 = 0.02;
    Vec theta_true = (Vec(2) << 1.0, 0.0).finished();
    double theta_bar = 1.0;
    Vec theta_hat0;  ///< empty: box center

    double K_s = 1.0;
    double K_V = 1e-5;
    double k_x = 0.0625;
    double k_y = 100.0;
    double k_theta = 400.0;
    double k_v = 1.0;
    double mu = 5.0;
    std::array<double, 4> phase_T = {3.0, 5.0, 7.0, 5.0};

    double p0 = 5e8;
    std::array<double, 3> p = {1.0, 1.0, 1.0};

    Vec ego0 = (Vec(4) << -64.8, 1.5, 0.0, 24.0).finished();
    Vec lead0 = (Vec(4) << 0.0, 1.5, 0.0, 19.0).finished();

    // Phase targets.
    double lane_right = 1.5;
    double lane_left = 4.5;
    double approach_speed = 27.0;    ///< phase 1, in lane
    double pass_speed = 30.0;        ///< phases 2-3
    double pass_offset = 49.0;       ///< phase 3 x_d relative to the lead
    double return_speed = 29.0;      ///< phase 4
    double heading_max = 0.12;       ///< saturation of the lane-keeping heading reference
    double heading_gain = 0.08;      ///< rad per metre of lateral error

    double gamma = 1000.0;
    estimator::EstimatorConfig estimator = GapConfig::default_estimator();

    double t_final = 40.0;
    double dt = 1e-3;

    double oncoming_first = 24.0;
    double oncoming_spacing = 30.0;
};

sim::PlantModel overtake_plant(const OvertakeConfig& cfg);

/// Single-vehicle kinematic bicycle rate; the lead's drift enters through the composite regressor.
Vec bicycle_rate(const OvertakeConfig& cfg, const Vec& z, const Vec& u);

double margin_sx(const OvertakeConfig& cfg, double v, double heading);

std::vector<safety::BarrierFunction> overtake_barriers(const OvertakeConfig& cfg);

struct PhaseState {
    int index = 1;  ///< 1..4, 5 once the overtake has completed
    double entry_time = 0.0;
    double deadline = 0.0;
    Vec z_d;        ///< desired ego state (x_d is NaN when free)
};

/// Desired state and CLF for the given phase at composite state z.
safety::LyapunovFunction overtake_clf(const OvertakeConfig& cfg, int phase);
Vec overtake_target(const OvertakeConfig& cfg, int phase, const Vec& z);

/// Advances on goal (V <= 0; phase 4 also needs the ego ahead of the lead). Phases 1-2 also advance at their deadline; phases 3-4 wait for
/// their goal so the ego never merges back before it has passed the lead.
PhaseState phase_manager(const OvertakeConfig& cfg, const PhaseState& phase, const Vec& z, double t);

Scenario build_overtake(const OvertakeConfig& cfg, ControllerKind kind);

enum class Decision { go_now, go_after_one, no_go };

std::string to_string(Decision d);

/// go-now iff T <= first arrival, go-after-1 iff T <= spacing, else no-go.
Decision overtake_decision(double T_controller, double first_arrival = 24.0, double spacing = 30.0);

/// First time the trace reports mode 5 (overtake done); +inf if never.
double overtake_completion_time(const sim::SimulationTrace& trace);

/// First time ||z|| <= radius; +inf if never.
double gap_completion_time(const sim::SimulationTrace& trace, double radius);

/// True when the trajectory crosses x = gap centre between the ellipses.
bool passed_through_gap(const GapConfig& cfg, const sim::SimulationTrace& trace);

}  // namespace fxtsafe::scenarios
