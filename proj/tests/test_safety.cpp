#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "fxtsafe/safety.hpp"
#include "fxtsafe/scenarios.hpp"
#include "oracles.hpp"

using namespace fxtsafe;
using namespace fxtsafe::safety;

namespace {

RobustTermInputs inputs(const RowVec& L, const Vec& th, double eta, double half) {
    return {L, th, eta, ParameterBox::symmetric(Vec::Zero(th.size()), half)};
}

estimator::EstimatorView view(const Vec& th, double eta, double eta_dot, const Mat& Gamma, double half) {
    return {th, eta, eta_dot, true, Gamma, ParameterBox::symmetric(Vec::Zero(th.size()), half)};
}

ModelEval gap_eval(const scenarios::GapConfig& cfg, const Vec& z) {
    return {Vec::Zero(2), Mat::Identity(2, 2), scenarios::gap_regressor(cfg, z)};
}

}  // namespace

TEST_CASE("psi worst case examples") {
    CHECK(psi_worst_case(inputs((RowVec(2) << 2.0, -3.0).finished(), Vec::Zero(2), 1.0, 10.0)) ==
          doctest::Approx(-5.0));
    const RowVec L = (RowVec(3) << 0.5, -1.5, 2.0).finished();
    const Vec th = (Vec(3) << 0.3, -0.2, 1.0).finished();
    CHECK(psi_worst_case(inputs(L, th, 0.0, 10.0)) == doctest::Approx(L.dot(th.transpose())));
    CHECK(phi_worst_case(inputs(L, th, 0.0, 10.0)) == doctest::Approx(L.dot(th.transpose())));
    CHECK(phi_worst_case(inputs((RowVec(2) << 1.0, 1.0).finished(), Vec::Zero(2), 2.0, 10.0)) ==
          doctest::Approx(4.0));
}

TEST_CASE("psi and phi match corner enumeration and bound every admissible theta") {
    std::mt19937 rng(41);
    std::uniform_int_distribution<int> pd(1, 4);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int p = pd(rng);
        RobustTermInputs in;
        in.L_delta = RowVec(p);
        in.theta_hat = Vec(p);
        Vec lo(p), hi(p);
        for (int i = 0; i < p; ++i) {
            in.L_delta(i) = 5.0 * u(rng);
            lo(i) = -3.0 * pos(rng) - 0.1;
            hi(i) = 3.0 * pos(rng) + 0.1;
            in.theta_hat(i) = lo(i) + (hi(i) - lo(i)) * pos(rng);
        }
        in.box = {lo, hi};
        in.eta = 4.0 * pos(rng);
        const auto [mn, mx] = oracle::corner_extremes(in);
        const double psi = psi_worst_case(in), phi = phi_worst_case(in);
        CHECK(std::abs(psi - mn) <= 1e-12 * (1.0 + std::abs(mn)));
        CHECK(std::abs(phi - mx) <= 1e-12 * (1.0 + std::abs(mx)));

        auto neg = in;
        neg.L_delta = -in.L_delta;
        CHECK(phi == doctest::Approx(-psi_worst_case(neg)).epsilon(1e-14));

        Vec th(p);
        for (int i = 0; i < p; ++i) {
            const double a = std::max(lo(i), in.theta_hat(i) - in.eta);
            const double b = std::min(hi(i), in.theta_hat(i) + in.eta);
            th(i) = a + (b - a) * pos(rng);
        }
        const double val = in.L_delta.dot(th.transpose());
        CHECK(psi <= val + 1e-12);
        CHECK(phi >= val - 1e-12);
    }
}

TEST_CASE("RaCBF row for the first ellipse at (0, -10)") {
    const scenarios::GapConfig cfg;
    const auto bf = scenarios::gap_barriers(cfg)[0];
    const Vec z = (Vec(2) << 0.0, -10.0).finished();
    const double b2 = 4.99 * 4.99;
    const double h = 1.0 + 16.0 / b2 - 1.0;
    const Vec grad = (Vec(2) << -2.0, -8.0 / b2).finished();
    const double d0 = 0.833 * (1.0 + std::pow(std::sin(0.0), 2));
    const double d1 = 0.833 * (1.0 + std::pow(std::cos(2.0 * M_PI * 4.0 * -10.0), 2));

    SUBCASE("no uncertainty") {
        const auto r = racbf_row(bf, z, gap_eval(cfg, z), view(Vec::Zero(2), 0.0, 0.0, Mat::Identity(2, 2), 10.0));
        CHECK(r.h == doctest::Approx(h));
        CHECK(r.h_r == doctest::Approx(h));
        CHECK(r.row.u_coeff(0) == doctest::Approx(-grad(0)));
        CHECK(r.row.u_coeff(1) == doctest::Approx(-grad(1)));
        CHECK(r.row.slack_coeff == doctest::Approx(-h));
        CHECK(r.row.rhs == doctest::Approx(0.0));
        CHECK_FALSE(r.margin_violated);
    }
    SUBCASE("with envelope") {
        const auto r = racbf_row(bf, z, gap_eval(cfg, z), view(Vec::Zero(2), 1.0, -0.5, Mat::Identity(2, 2), 10.0));
        const double psi = -std::abs(grad(0) * d0) - std::abs(grad(1) * d1);
        CHECK(r.h_r == doctest::Approx(h - 1.0));
        CHECK(r.row.slack_coeff == doctest::Approx(-(h - 1.0)));
        CHECK(r.row.rhs == doctest::Approx(psi - 2.0 * 1.0 * -0.5));
        CHECK(r.margin_violated);
    }
}

TEST_CASE("certainty-equivalence collapse") {
    const scenarios::GapConfig cfg;
    const auto bf = scenarios::gap_barriers(cfg)[1];
    const Vec z = (Vec(2) << 2.3, 0.7).finished();
    const auto ev = gap_eval(cfg, z);
    const Vec theta = cfg.theta_true;
    const auto r = racbf_row(bf, z, ev, view(theta, 0.0, 0.0, 1000.0 * Mat::Identity(2, 2), 10.0));
    const Vec g = bf.grad_h(z);
    CHECK(r.row.rhs == doctest::Approx(g.dot(ev.f) + g.transpose() * ev.delta * theta));
    CHECK(r.row.slack_coeff == doctest::Approx(-bf.h(z)));
    CHECK((r.row.u_coeff + g.transpose() * ev.g).norm() <= 1e-14);
}

TEST_CASE("shrinking envelope never tightens the row") {
    const scenarios::GapConfig cfg;
    const auto bf = scenarios::gap_barriers(cfg)[0];
    const Vec z = (Vec(2) << 2.5, -3.0).finished();
    const auto ev = gap_eval(cfg, z);
    const Mat G = 10.0 * Mat::Identity(2, 2);
    const auto shrinking = racbf_row(bf, z, ev, view(Vec::Zero(2), 1.0, -3.0, G, 10.0));
    const auto frozen = racbf_row(bf, z, ev, view(Vec::Zero(2), 1.0, 0.0, G, 10.0));
    CHECK(shrinking.row.rhs >= frozen.row.rhs);
    CHECK(shrinking.h_r == frozen.h_r);
}

TEST_CASE("certain barriers carry no margin") {
    BarrierFunction bf{"speed", [](const Vec& x) { return 30.0 - x(0); },
                       [](const Vec&) { return (Vec(1) << -1.0).finished(); }, false};
    const ModelEval ev{Vec::Zero(1), Mat::Identity(1, 1), Mat::Zero(1, 2)};
    const auto r = racbf_row(bf, Vec::Constant(1, 29.9), ev, view(Vec::Zero(2), 5.0, -1.0, Mat::Identity(2, 2), 10.0));
    CHECK(r.h_r == doctest::Approx(r.h));
    CHECK(r.row.rhs == doctest::Approx(0.0));
    CHECK_FALSE(r.margin_violated);
}

TEST_CASE("fixed-time CLF row") {
    const scenarios::GapConfig cfg;
    const auto lf = scenarios::gap_clf(cfg);
    CHECK(lf.c1 == doctest::Approx(1.963).epsilon(5e-4));
    CHECK(lf.c1 == doctest::Approx(5.0 * M_PI / 8.0).epsilon(1e-14));
    CHECK(lf.c2 == lf.c1);
    CHECK(lf.gamma1 == doctest::Approx(0.8));
    CHECK(lf.gamma2 == doctest::Approx(1.2));

    const Vec z = (Vec(2) << 3.0, -10.0).finished();
    const auto ev = gap_eval(cfg, z);
    const auto r = fxt_clf_row(lf, z, ev, view(Vec::Zero(2), 0.0, 0.0, Mat::Identity(2, 2), 10.0));
    CHECK(r.V == doctest::Approx(109.0));
    const double c = 5.0 * M_PI / 8.0;
    CHECK(r.row.rhs == doctest::Approx(-c * std::pow(109.0, 0.8) - c * std::pow(109.0, 1.2)));
    CHECK(r.row.slack_coeff == -1.0);
    CHECK(r.row.u_coeff(0) == doctest::Approx(6.0));
    CHECK(r.row.u_coeff(1) == doctest::Approx(-20.0));

    const auto goal = fxt_clf_row(lf, Vec::Zero(2), ev, view(Vec::Zero(2), 0.0, 0.0, Mat::Identity(2, 2), 10.0));
    CHECK(goal.V == 0.0);
    CHECK(goal.row.rhs == 0.0);
}

TEST_CASE("CLF row adds the worst case of the uncertain drift") {
    const scenarios::GapConfig cfg;
    const auto lf = scenarios::gap_clf(cfg);
    const Vec z = (Vec(2) << 1.0, 1.0).finished();
    const auto ev = gap_eval(cfg, z);
    const auto exact = fxt_clf_row(lf, z, ev, view(Vec::Zero(2), 0.0, 0.0, Mat::Identity(2, 2), 10.0));
    const auto robust = fxt_clf_row(lf, z, ev, view(Vec::Zero(2), 2.0, 0.0, Mat::Identity(2, 2), 10.0));
    const RowVec LdV = lf.grad_V(z).transpose() * ev.delta;
    CHECK(exact.row.rhs - robust.row.rhs == doctest::Approx(2.0 * LdV.cwiseAbs().sum()));
}

TEST_CASE("numeric gradient helper") {
    auto fn = [](const Vec& x) { return std::sin(x(0)) * x(1) * x(1); };
    const Vec x = (Vec(2) << 0.4, -1.3).finished();
    const Vec g = numeric_gradient(fn, x);
    CHECK(g(0) == doctest::Approx(std::cos(0.4) * 1.69).epsilon(1e-8));
    CHECK(g(1) == doctest::Approx(std::sin(0.4) * 2.0 * -1.3).epsilon(1e-8));
}
