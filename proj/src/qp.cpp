#include "fxtsafe/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fxtsafe::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Internal constraint n'w <= e, tagged with its public index.
struct Constraint {
    Vec normal;
    double rhs;
    int index;
};

std::vector<Constraint> gather_constraints(const QuadraticProgram& qp)
{
    const int d = qp.dim();
    const int k = qp.rows();
    std::vector<Constraint> out;
    out.reserve(k + 2 * d);
    for (int i = 0; i < k; ++i) {
        out.push_back({qp.A.row(i).transpose(), qp.b(i), i});
    }
    for (int i = 0; i < d; ++i) {
        if (std::isfinite(qp.lb(i))) {
            Vec n = Vec::Zero(d);
            n(i) = -1.0;
            out.push_back({n, -qp.lb(i), k + i});
        }
    }
    for (int i = 0; i < d; ++i) {
        if (std::isfinite(qp.ub(i))) {
            Vec n = Vec::Zero(d);
            n(i) = 1.0;
            out.push_back({n, qp.ub(i), k + d + i});
        }
    }
    return out;
}

void check_dimensions(const QuadraticProgram& qp)
{
    const int d = qp.dim();
    if (qp.H.rows() != d || qp.H.cols() != d || qp.lb.size() != d || qp.ub.size() != d
        || qp.A.rows() != qp.rows() || (qp.rows() > 0 && qp.A.cols() != d)) {
        throw std::invalid_argument("qp: inconsistent dimensions");
    }
}

Multipliers scatter(const QuadraticProgram& qp, const std::vector<Constraint>& cons,
                    const std::vector<int>& active, const std::vector<double>& u)
{
    const int d = qp.dim();
    const int k = qp.rows();
    Multipliers m{Vec::Zero(k), Vec::Zero(d), Vec::Zero(d)};
    for (std::size_t j = 0; j < active.size(); ++j) {
        const int idx = cons[active[j]].index;
        if (idx < k) {
            m.rows(idx) = u[j];
        } else if (idx < k + d) {
            m.lower(idx - k) = u[j];
        } else {
            m.upper(idx - k - d) = u[j];
        }
    }
    return m;
}

}  // namespace

QuadraticProgram QuadraticProgram::unconstrained(const Mat& H, const Vec& c)
{
    const auto d = c.size();
    return {H, c, Mat::Zero(0, d), Vec::Zero(0), Vec::Constant(d, -kInf), Vec::Constant(d, kInf)};
}

std::string_view to_string(Status status)
{
    switch (status) {
    case Status::optimal:
        return "optimal";
    case Status::infeasible:
        return "infeasible";
    case Status::max_iterations:
        return "max_iterations";
    }
    return "unknown";
}

double objective(const QuadraticProgram& qp, const Vec& w)
{
    return 0.5 * w.dot(qp.H * w) + qp.c.dot(w);
}

double kkt_residual(const QuadraticProgram& qp, const Vec& w, const Multipliers& mult)
{
    const int d = qp.dim();
    Vec grad = qp.H * w + qp.c - mult.lower + mult.upper;
    if (qp.rows() > 0) {
        grad += qp.A.transpose() * mult.rows;
    }
    double res = grad.lpNorm<Eigen::Infinity>();

    for (int i = 0; i < qp.rows(); ++i) {
        const double slack = qp.b(i) - qp.A.row(i).dot(w);
        res = std::max({res, -slack, -mult.rows(i), std::abs(mult.rows(i) * slack)});
    }
    for (int i = 0; i < d; ++i) {
        res = std::max({res, -mult.lower(i), -mult.upper(i)});
        if (std::isfinite(qp.lb(i))) {
            const double slack = w(i) - qp.lb(i);
            res = std::max({res, -slack, std::abs(mult.lower(i) * slack)});
        } else {
            res = std::max(res, std::abs(mult.lower(i)));
        }
        if (std::isfinite(qp.ub(i))) {
            const double slack = qp.ub(i) - w(i);
            res = std::max({res, -slack, std::abs(mult.upper(i) * slack)});
        } else {
            res = std::max(res, std::abs(mult.upper(i)));
        }
    }
    return res;
}

QPSolution solve(const QuadraticProgram& qp)
{
    check_dimensions(qp);
    const int d = qp.dim();

    Eigen::LLT<Mat> llt(qp.H);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("qp: H is not positive definite");
    }
    const Mat Ginv = llt.solve(Mat::Identity(d, d));

    const auto cons = gather_constraints(qp);
    const int max_iter = 100 * std::max(d, 1);

    Vec x = -Ginv * qp.c;
    std::vector<int> active;   // positions in cons
    std::vector<double> u;     // multipliers of active constraints

    QPSolution sol;
    int iter = 0;

    auto violation = [&](int j) {
        // positive when violated
        return cons[j].normal.dot(x) - cons[j].rhs;
    };
    auto tolerance = [&](int j) {
        return 1e-11 * (1.0 + std::abs(cons[j].rhs) + cons[j].normal.lpNorm<1>() * x.lpNorm<Eigen::Infinity>());
    };

    while (true) {
        int p = -1;
        double worst = 0.0;
        for (int j = 0; j < static_cast<int>(cons.size()); ++j) {
            if (std::find(active.begin(), active.end(), j) != active.end()) {
                continue;
            }
            const double v = violation(j);
            if (v > tolerance(j) && v > worst) {
                worst = v;
                p = j;
            }
        }
        if (p < 0) {
            sol.status = Status::optimal;
            break;
        }

        double u_p = 0.0;
        bool added = false;
        while (!added) {
            if (++iter > max_iter) {
                sol.status = Status::max_iterations;
                break;
            }
            const int q = static_cast<int>(active.size());
            const Vec& np = cons[p].normal;
            Vec r = Vec::Zero(q);
            Vec z;
            if (q > 0) {
                Mat N(d, q);
                for (int j = 0; j < q; ++j) {
                    N.col(j) = cons[active[j]].normal;
                }
                const Mat GN = Ginv * N;
                const Mat B = N.transpose() * GN;
                r = B.ldlt().solve(GN.transpose() * np);
                z = Ginv * np - GN * r;
            } else {
                z = Ginv * np;
            }

            double t1 = kInf;
            int drop = -1;
            for (int j = 0; j < q; ++j) {
                if (r(j) > 1e-14) {
                    const double ratio = u[j] / r(j);
                    if (ratio < t1) {
                        t1 = ratio;
                        drop = j;
                    }
                }
            }
            const double zn = z.dot(np);
            const double t2 = zn > 1e-14 * (1.0 + np.squaredNorm()) ? violation(p) / zn : kInf;

            if (!std::isfinite(t1) && !std::isfinite(t2)) {
                sol.status = Status::infeasible;
                break;
            }
            const double t = std::min(t1, t2);
            for (int j = 0; j < q; ++j) {
                u[j] -= t * r(j);
            }
            u_p += t;
            if (std::isfinite(t2)) {
                x -= t * z;
            }
            if (t2 <= t1) {
                active.push_back(p);
                u.push_back(u_p);
                added = true;
            } else {
                active.erase(active.begin() + drop);
                u.erase(u.begin() + drop);
            }
        }
        if (!added) {
            break;
        }
    }

    sol.iterations = iter;
    sol.w_star = x;
    sol.objective = objective(qp, x);
    for (int j : active) {
        sol.active_set.push_back(cons[j].index);
    }
    for (double& m : u) {
        m = std::max(m, 0.0);
    }
    sol.multipliers = scatter(qp, cons, active, u);
    sol.kkt_residual = kkt_residual(qp, x, sol.multipliers);
    return sol;
}

}  // namespace fxtsafe::qp
