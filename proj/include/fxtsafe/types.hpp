#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fxtsafe {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

/// Axis-aligned box of admissible parameters.
struct ParameterBox {
    Vec lower;
    Vec upper;

    static ParameterBox symmetric(const Vec& center, double half_width);

    int size() const { return static_cast<int>(lower.size()); }
    bool valid() const;
    bool contains(const Vec& theta, double tol = 0.0) const;
    Vec center() const { return 0.5 * (lower + upper); }

    /// Largest pairwise infinity-norm distance between two members.
    double diameter_inf() const;
};

/// Componentwise clamp onto the box.
Vec project_box(const Vec& theta, const ParameterBox& box);

class SimulationDivergence : public std::runtime_error {
public:
    SimulationDivergence(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

class EstimatorSingularity : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fxtsafe
