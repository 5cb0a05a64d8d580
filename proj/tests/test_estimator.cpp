#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "fxtsafe/estimator.hpp"
#include "fxtsafe/sim.hpp"
#include "oracles.hpp"

using namespace fxtsafe;
using namespace fxtsafe::estimator;

namespace {

AdaptationGains table_gains(int p, double gamma = 1.0, double vartheta = 2.0) {
    AdaptationGains g;
    g.Gamma = gamma * Mat::Identity(p, p);
    g.c1e = 50.0;
    g.c2e = 50.0;
    g.mu_e = 5.0;
    g.vartheta = vartheta;
    return g;
}

// Scalar filter channel as [b, bdot], driven by a constant input.
Vec scalar_filter_run(double k, double input, double t_end, double dt, double* peak = nullptr) {
    auto bank = FilterBank::zeros(1, 1, k);
    Vec y = Vec::Zero(2);
    auto rate = [&](double, const Vec& s) {
        bank.x_f(0) = s(0);
        bank.xdot_f(0) = s(1);
        const auto r = filter_rates(bank, Vec::Constant(1, input), Vec::Zero(1), Mat::Zero(1, 1));
        return (Vec(2) << r.x_f(0), r.xdot_f(0)).finished();
    };
    double mx = 0.0;
    for (double t = 0.0; t < t_end - 1e-15; t += dt) {
        y = sim::rk4_step(rate, t, y, dt);
        mx = std::max(mx, y(0));
    }
    if (peak) *peak = mx;
    return y;
}

}  // namespace

TEST_CASE("filter has unit DC gain") {
    const double k = 0.001;
    const Vec y = scalar_filter_run(k, 3.0, 20.0 * k, k / 50.0);
    CHECK(std::abs(y(0) - 3.0) / 3.0 <= 1e-3);
}

TEST_CASE("critically damped filter never overshoots a step") {
    for (double k : {1e-3, 0.01, 0.5}) {
        double peak = 0.0;
        scalar_filter_run(k, 1.0, 30.0 * k, k / 40.0, &peak);
        CHECK(peak <= 1.0 + 1e-12);
    }
}

TEST_CASE("zero input keeps the filters at rest") {
    const auto bank = FilterBank::zeros(3, 2, 0.001);
    const auto r = filter_rates(bank, Vec::Zero(3), Vec::Zero(3), Mat::Zero(3, 2));
    CHECK(r.x_f.norm() == 0.0);
    CHECK(r.xdot_f.norm() == 0.0);
    CHECK(r.phi_f.norm() == 0.0);
    CHECK(r.phidot_f.norm() == 0.0);
    CHECK(r.Phi_f.norm() == 0.0);
    CHECK(r.Phidot_f.norm() == 0.0);
}

TEST_CASE("filter second derivative matches the defining ODE") {
    auto bank = FilterBank::zeros(2, 1, 0.01);
    bank.x_f << 0.3, -0.1;
    bank.xdot_f << 2.0, 1.0;
    const Vec x = (Vec(2) << 1.0, 2.0).finished();
    const auto r = filter_rates(bank, x, Vec::Zero(2), Mat::Zero(2, 1));
    const double k = 0.01;
    for (int i = 0; i < 2; ++i) {
        CHECK(r.x_f(i) == doctest::Approx(bank.xdot_f(i)));
        CHECK(r.xdot_f(i) == doctest::Approx((x(i) - bank.x_f(i) - 2.0 * k * bank.xdot_f(i)) / (k * k)));
    }
}

TEST_CASE("auxiliary memory with constant regressor has the exponential closed form") {
    const int p = 2;
    const double ell = 100.0;
    const Vec theta = (Vec(2) << -1.0, 1.0).finished();
    auto bank = FilterBank::zeros(p, p, 0.001);
    bank.Phi_f = Mat::Identity(p, p);
    bank.xdot_f = bank.Phi_f * theta;  // phi_f stays zero
    auto aux = AuxiliaryMemory::zeros(p, ell);

    const auto r0 = aux_rates(aux, bank);
    CHECK((r0.P - Mat::Identity(p, p)).norm() <= 1e-15);
    CHECK((r0.Q - theta).norm() <= 1e-15);

    Vec y = Vec::Zero(p * p + p);
    auto rate = [&](double, const Vec& s) {
        aux.P = Eigen::Map<const Mat>(s.data(), p, p);
        aux.Q = s.tail(p);
        const auto r = aux_rates(aux, bank);
        Vec d(p * p + p);
        d.head(p * p) = Eigen::Map<const Vec>(r.P.data(), p * p);
        d.tail(p) = r.Q;
        return d;
    };
    const double dt = 1e-4;
    double t = 0.0;
    for (int k = 0; k < 300; ++k, t += dt) y = sim::rk4_step(rate, t, y, dt);
    const double expect = (1.0 - std::exp(-ell * t)) / ell;
    const Mat P = Eigen::Map<const Mat>(y.data(), p, p);
    CHECK((P - expect * Mat::Identity(p, p)).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((y.tail(p) - P * theta).norm() <= 1e-12);
}

TEST_CASE("zero-initialised filters give zero auxiliary rates") {
    const auto bank = FilterBank::zeros(2, 2, 0.001);
    const auto aux = AuxiliaryMemory::zeros(2, 100.0);
    const auto r = aux_rates(aux, bank);
    CHECK(r.P.norm() == 0.0);
    CHECK(r.Q.norm() == 0.0);
}

TEST_CASE("W examples") {
    AuxiliaryMemory aux = AuxiliaryMemory::zeros(2, 100.0);
    aux.P = Mat::Identity(2, 2);
    aux.Q = (Vec(2) << 1.0, 2.0).finished();
    CHECK((compute_W(aux, Vec::Zero(2)) - (Vec(2) << -1.0, -2.0).finished()).norm() == 0.0);

    std::mt19937 rng(5);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 1 + trial % 4;
        aux = AuxiliaryMemory::zeros(p, 100.0);
        aux.P = oracle::random_pd(rng, p, 0.01, 10.0);
        Vec th(p), th_hat(p);
        for (int i = 0; i < p; ++i) {
            th(i) = n01(rng);
            th_hat(i) = n01(rng);
        }
        aux.Q = aux.P * th;
        CHECK((compute_W(aux, th) ).norm() <= 1e-12);
        CHECK((compute_W(aux, th_hat) + aux.P * (th - th_hat)).norm() <= 1e-12 * (1.0 + aux.P.norm() * th.norm()));
    }
}

TEST_CASE("scalar fixed-time rate evaluated factor by factor") {
    const auto g = table_gains(1);
    const Mat P = Mat::Constant(1, 1, 2.0);
    const Vec W = Vec::Constant(1, -1.0);  // theta_tilde = 0.5
    const double nu_ref = 0.5 * (W(0) / P(0, 0)) * (W(0) / P(0, 0)) / 1.0;
    CHECK(nu_ref == doctest::Approx(0.125));
    CHECK(nu(P, W, g.Gamma) == doctest::Approx(nu_ref).epsilon(1e-14));
    const double quad = W(0) * W(0) / P(0, 0);  // W' P^-T W
    const double drive = -50.0 * std::pow(nu_ref, 0.8) - 50.0 * std::pow(nu_ref, 1.2);
    const double expect = 1.0 * W(0) * drive / quad;
    const Vec r = fxts_rate(P, W, g);
    CHECK(r(0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(r(0) == doctest::Approx(27.1934).epsilon(1e-4));
    CHECK(r(0) > 0.0);  // theta_hat moves up toward theta
}

TEST_CASE("dead zone returns zero for both laws") {
    const auto g = table_gains(2);
    const Mat P = Mat::Identity(2, 2);
    CHECK(fxts_rate(P, Vec::Zero(2), g).norm() == 0.0);
    CHECK(ft_rate(P, Vec::Zero(2), g).norm() == 0.0);
    CHECK(fxts_rate(P, Vec::Constant(2, 1e-12), g).norm() == 0.0);
}

TEST_CASE("ill-conditioned P raises a singularity error") {
    const auto g = table_gains(2);
    Mat P = Mat::Identity(2, 2);
    P(1, 1) = 1e-14;
    CHECK_THROWS_AS(fxts_rate(P, Vec::Ones(2), g), EstimatorSingularity);
    CHECK_THROWS_AS(ft_rate(P, Vec::Ones(2), g), EstimatorSingularity);
}

TEST_CASE("finite-time reference law") {
    const auto g = table_gains(1);
    const Vec r = ft_rate(Mat::Constant(1, 1, 2.0), Vec::Constant(1, -1.0), g);
    CHECK(r(0) == doctest::Approx(2.0));

    // Scalar PE problem with P = 2 sigma fixed: finishes within |theta_tilde0| / (Gamma sigma).
    const double sigma = 1e-2, theta = 0.7;
    const Mat P = Mat::Constant(1, 1, 2.0 * sigma);
    double th_hat = -0.3, t = 0.0;
    const double dt = 1e-4;
    while (std::abs(theta - th_hat) > 1e-3 && t < 10.0) {
        const Vec W = P * Vec::Constant(1, th_hat - theta);
        th_hat += dt * ft_rate(P, W, g)(0);
        t += dt;
    }
    CHECK(t <= std::abs(theta + 0.3) / sigma);
}

TEST_CASE("Lyapunov function of the error follows the fixed-time decrease") {
    std::mt19937 rng(11);
    auto g = table_gains(2, 3.0);
    const Mat P = oracle::random_pd(rng, 2, 0.05, 2.0);
    const Vec theta = (Vec(2) << 0.4, -0.8).finished();
    Vec th_hat = (Vec(2) << -1.5, 1.1).finished();
    auto V = [&](const Vec& e) { return 0.5 * e.dot(g.Gamma.inverse() * e); };
    const double h = 1e-7;
    for (int k = 0; k < 20000; ++k) {
        const Vec e = theta - th_hat;
        const double v = V(e);
        if (v < 1e-6) break;
        const Vec W = P * th_hat - P * theta;
        const Vec next = th_hat + h * fxts_rate(P, W, g);
        const double dv = (V(theta - next) - v) / h;
        const double law = -50.0 * std::pow(v, 0.8) - 50.0 * std::pow(v, 1.2);
        if (k % 1000 == 0) CHECK(std::abs(dv - law) <= 0.02 * std::abs(law));
        th_hat = next;
    }
}

TEST_CASE("nu equals the error Lyapunov function when Q = P theta") {
    std::mt19937 rng(3);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 1 + trial % 4;
        const Mat P = oracle::random_pd(rng, p, 0.1, 10.0);
        Vec gdiag(p), e(p);
        for (int i = 0; i < p; ++i) {
            gdiag(i) = 0.5 + std::abs(n01(rng));
            e(i) = n01(rng);
        }
        const Mat Gamma = gdiag.asDiagonal();
        const Vec W = -P * e;
        const double ref = 0.5 * e.dot(gdiag.cwiseInverse().cwiseProduct(e));
        CHECK(std::abs(nu(P, W, Gamma) - ref) <= 1e-10 * ref);
    }
}

TEST_CASE("envelope starts at vartheta sqrt(p) and reaches zero at the tight bound") {
    const auto g = table_gains(2, 1000.0, 20.0);
    CHECK(eta(0.0, g, 20.0) == doctest::Approx(20.0 * std::sqrt(2.0)).epsilon(1e-12));
    const auto sb = settling_bounds(g);
    CHECK(eta(sb.T_tight, g, 20.0) <= 1e-6);
    CHECK(eta(sb.T_tight * 1.01, g, 20.0) == 0.0);
    CHECK_THROWS_AS(eta(-1e-3, g, 20.0), std::domain_error);
}

TEST_CASE("envelope decreases strictly and its derivative matches finite differences") {
    const auto g = table_gains(2, 10.0, 4.0);
    const double T = settling_bounds(g).T_tight;
    double prev = eta(0.0, g, 4.0);
    for (int i = 1; i <= 200; ++i) {
        const double t = 0.9 * T * i / 200.0;
        const double e = eta(t, g, 4.0);
        CHECK(e < prev);
        prev = e;
        const double h = 1e-7 * T;
        const double fd = (eta(t + h, g, 4.0) - eta(t - h, g, 4.0)) / (2.0 * h);
        const double an = eta_dot(t, g, 4.0);
        CHECK(an <= 0.0);
        CHECK(std::abs(fd - an) <= 1e-4 * std::abs(an));
    }
    for (double f : {0.95, 0.99}) CHECK(std::isfinite(eta_dot(f * T, g, 4.0)));
}

TEST_CASE("settling bounds") {
    const auto g = table_gains(2, 1000.0, 20.0);
    const auto sb = settling_bounds(g);
    CHECK(sb.T_b == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(sb.T_tight <= sb.T_b);

    // Xi -> pi/2 limit.
    auto big = g;
    big.vartheta = 1e40;
    CHECK(settling_bounds(big).T_tight == doctest::Approx(5.0 * M_PI / (2.0 * 50.0)).epsilon(1e-6));

    std::mt19937 rng(17);
    std::uniform_real_distribution<double> c(0.5, 200.0), mu(1.2, 10.0), th(0.0, 1e3), gm(0.01, 1e4);
    for (int i = 0; i < 1000; ++i) {
        AdaptationGains r;
        r.c1e = c(rng);
        r.c2e = c(rng);
        r.mu_e = mu(rng);
        r.Gamma = gm(rng) * Mat::Identity(2, 2);
        r.vartheta = th(rng);
        const auto b = settling_bounds(r);
        CHECK(b.T_tight <= b.T_b * (1.0 + 1e-12));
    }
}

TEST_CASE("activation latches") {
    EstimatorState s;
    s.gains = table_gains(2);
    s.aux = AuxiliaryMemory::zeros(2, 100.0);
    CHECK_FALSE(check_activation(s, 0.0));
    s.aux.P = 2e-4 * Mat::Identity(2, 2);
    CHECK(check_activation(s, 0.01));
    CHECK(s.t_activate == doctest::Approx(0.01));
    s.aux.P.setZero();
    CHECK(check_activation(s, 0.02));
    CHECK(s.t_activate == doctest::Approx(0.01));
}

TEST_CASE("box projection") {
    const auto box = ParameterBox::symmetric(Vec::Zero(2), 10.0);
    const Vec in = (Vec(2) << 3.0, -4.0).finished();
    CHECK(project_box(in, box) == in);
    CHECK(project_box((Vec(2) << 12.0, -12.0).finished(), box) == (Vec(2) << 10.0, -10.0).finished());

    std::mt19937 rng(23);
    std::normal_distribution<double> n(0.0, 15.0);
    for (int i = 0; i < 500; ++i) {
        const Vec a = (Vec(2) << n(rng), n(rng)).finished();
        const Vec b = (Vec(2) << n(rng), n(rng)).finished();
        const Vec pa = project_box(a, box), pb = project_box(b, box);
        CHECK(project_box(pa, box) == pa);
        CHECK((pa - pb).lpNorm<Eigen::Infinity>() <= (a - b).lpNorm<Eigen::Infinity>() + 1e-15);
    }
}

TEST_CASE("smooth state packing round-trips") {
    EstimatorConfig cfg;
    cfg.gains = table_gains(2, 10.0, 4.0);
    AdaptiveEstimator est(3, 2, cfg, ParameterBox::symmetric(Vec::Zero(2), 2.0), Vec::Zero(2));
    CHECK(est.smooth_size() == 4 * 3 + 2 * 3 * 2 + 4 + 2);
    Vec y(est.smooth_size());
    for (int i = 0; i < y.size(); ++i) y(i) = 0.1 * i;
    est.unpack(y);
    CHECK((est.pack() - y).norm() == 0.0);
}

TEST_CASE("frozen law holds the centre and reports the full box") {
    EstimatorConfig cfg;
    cfg.law = Law::frozen;
    cfg.gains = table_gains(2, 10.0, 4.0);
    const auto box = ParameterBox::symmetric(Vec::Zero(2), 2.0);
    AdaptiveEstimator est(2, 2, cfg, box, box.center());
    Vec y = est.pack();
    y.setConstant(1.0);
    est.unpack(y);
    est.update_estimate(0.1, 0.1);
    const auto v = est.view(0.1);
    CHECK(v.theta_hat.norm() == 0.0);
    CHECK(v.eta == doctest::Approx(4.0));
    CHECK(v.eta_dot == 0.0);
}
