#pragma once

#include <functional>
#include <string>

#include "fxtsafe/estimator.hpp"
#include "fxtsafe/types.hpp"

namespace fxtsafe::safety {

/// Safe set {x : h(x) >= 0}.
struct BarrierFunction {
    std::string label;
    std::function<double(const Vec&)> h;
    std::function<Vec(const Vec&)> grad_h;
    /// Whether the regressor can act on this barrier; only such barriers carry the
    /// shrinking margin 0.5 eta' Gamma^-1 eta.
    bool uncertain = true;
};

/// V >= 0 with the fixed-time decrease V' <= -c1 V^g1 - c2 V^g2.
struct LyapunovFunction {
    std::function<double(const Vec&)> V;
    std::function<Vec(const Vec&)> grad_V;
    double c1 = 1.0;
    double c2 = 1.0;
    double gamma1 = 0.8;
    double gamma2 = 1.2;

    /// c1 = c2 = mu pi / (2 T), gamma = 1 -+ 1/mu: settles within T.
    static LyapunovFunction fixed_time(std::function<double(const Vec&)> V, std::function<Vec(const Vec&)> grad_V,
                                       double T, double mu);
};

/// Dynamics evaluated once per control step.
struct ModelEval {
    Vec f;
    Mat g;
    Mat delta;
};

struct RobustTermInputs {
    RowVec L_delta;  ///< certificate gradient times Delta(x); column i is C_i
    Vec theta_hat;
    double eta = 0.0;
    ParameterBox box;
};

/// Sum_i min{C_i P(theta_hat_i - eta), C_i P(theta_hat_i + eta)}: the smallest value of
/// L_delta theta over the clamped interval box.
double psi_worst_case(const RobustTermInputs& in);

/// Mirror of psi_worst_case with max, the largest value of L_delta theta.
double phi_worst_case(const RobustTermInputs& in);

/// a'u + slack_coeff * delta <= rhs.
struct LinearRow {
    RowVec u_coeff;
    double slack_coeff = 0.0;
    double rhs = 0.0;
};

struct BarrierRow {
    LinearRow row;
    double h = 0.0;
    double h_r = 0.0;
    bool margin_violated = false;
};

/// L_f h + L_g h u + Psi - Tr(Gamma^-1) eta eta_dot >= -delta_i h_r, h_r = h - 0.5 eta' Gamma^-1 eta.
BarrierRow racbf_row(const BarrierFunction& bf, const Vec& x, const ModelEval& model,
                     const estimator::EstimatorView& est);

struct ClfRow {
    LinearRow row;
    double V = 0.0;
};

/// L_f V + L_g V u + phi <= delta_0 - c1 V^g1 - c2 V^g2 (powers of max(V, 0)).
ClfRow fxt_clf_row(const LyapunovFunction& lf, const Vec& x, const ModelEval& model,
                   const estimator::EstimatorView& est);

/// Central-difference gradient, for tests.
Vec numeric_gradient(const std::function<double(const Vec&)>& fn, const Vec& x, double step = 1e-6);

}  // namespace fxtsafe::safety
