#include "fxtsafe/safety.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fxtsafe::safety {

LyapunovFunction LyapunovFunction::fixed_time(std::function<double(const Vec&)> V,
                                              std::function<Vec(const Vec&)> grad_V, double T, double mu)
{
    const double c = mu * std::numbers::pi / (2.0 * T);
    return {std::move(V), std::move(grad_V), c, c, 1.0 - 1.0 / mu, 1.0 + 1.0 / mu};
}

namespace {

template <typename Pick>
double worst_case(const RobustTermInputs& in, Pick pick)
{
    const int p = static_cast<int>(in.L_delta.size());
    double total = 0.0;
    for (int i = 0; i < p; ++i) {
        const double lo = std::clamp(in.theta_hat(i) - in.eta, in.box.lower(i), in.box.upper(i));
        const double hi = std::clamp(in.theta_hat(i) + in.eta, in.box.lower(i), in.box.upper(i));
        total += pick(in.L_delta(i) * lo, in.L_delta(i) * hi);
    }
    return total;
}

double trace_inverse(const Mat& Gamma)
{
    return Gamma.size() == 0 ? 0.0 : Gamma.diagonal().cwiseInverse().sum();
}

}  // namespace

double psi_worst_case(const RobustTermInputs& in)
{
    return worst_case(in, [](double a, double b) { return std::min(a, b); });
}

double phi_worst_case(const RobustTermInputs& in)
{
    return worst_case(in, [](double a, double b) { return std::max(a, b); });
}

BarrierRow racbf_row(const BarrierFunction& bf, const Vec& x, const ModelEval& model,
                     const estimator::EstimatorView& est)
{
    const Vec grad = bf.grad_h(x);
    const double Lf = grad.dot(model.f);
    const RowVec Lg = grad.transpose() * model.g;

    double psi = 0.0;
    if (model.delta.cols() > 0) {
        psi = psi_worst_case({grad.transpose() * model.delta, est.theta_hat, est.eta, est.box});
    }

    BarrierRow out;
    out.h = bf.h(x);
    double eta_term = 0.0;
    double margin = 0.0;
    if (bf.uncertain) {
        const double tr = trace_inverse(est.Gamma);
        margin = 0.5 * est.eta * est.eta * tr;
        eta_term = tr * est.eta * est.eta_dot;
    }
    out.h_r = out.h - margin;
    out.margin_violated = out.h_r < 0.0;
    // -Lg u - h_r delta_i <= Lf + Psi - Tr(Gamma^-1) eta eta_dot
    out.row = {-Lg, -out.h_r, Lf + psi - eta_term};
    return out;
}

ClfRow fxt_clf_row(const LyapunovFunction& lf, const Vec& x, const ModelEval& model,
                   const estimator::EstimatorView& est)
{
    const Vec grad = lf.grad_V(x);
    const double Lf = grad.dot(model.f);
    const RowVec Lg = grad.transpose() * model.g;
    double phi = 0.0;
    if (model.delta.cols() > 0) {
        phi = phi_worst_case({grad.transpose() * model.delta, est.theta_hat, est.eta, est.box});
    }
    ClfRow out;
    out.V = lf.V(x);
    const double Vp = std::max(out.V, 0.0);
    const double decay = lf.c1 * std::pow(Vp, lf.gamma1) + lf.c2 * std::pow(Vp, lf.gamma2);
    // Lg u - delta_0 <= -Lf - phi - decay
    out.row = {Lg, -1.0, -Lf - phi - decay};
    return out;
}

Vec numeric_gradient(const std::function<double(const Vec&)>& fn, const Vec& x, double step)
{
    Vec g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Vec a = x;
        Vec b = x;
        const double h = step * std::max(1.0, std::abs(x(i)));
        a(i) += h;
        b(i) -= h;
        g(i) = (fn(a) - fn(b)) / (2.0 * h);
    }
    return g;
}

}  // namespace fxtsafe::safety
