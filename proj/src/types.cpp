#include "fxtsafe/types.hpp"

#include <algorithm>

namespace fxtsafe {

ParameterBox ParameterBox::symmetric(const Vec& center, double half_width)
{
    return {center.array() - half_width, center.array() + half_width};
}

bool ParameterBox::valid() const
{
    return lower.size() == upper.size() && (lower.array() <= upper.array()).all();
}

bool ParameterBox::contains(const Vec& theta, double tol) const
{
    return theta.size() == lower.size() && (theta.array() >= lower.array() - tol).all()
           && (theta.array() <= upper.array() + tol).all();
}

double ParameterBox::diameter_inf() const
{
    return size() == 0 ? 0.0 : (upper - lower).maxCoeff();
}

Vec project_box(const Vec& theta, const ParameterBox& box)
{
    return theta.cwiseMax(box.lower).cwiseMin(box.upper);
}

}  // namespace fxtsafe
