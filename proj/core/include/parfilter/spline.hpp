#pragma once

#include <span>

#include "parfilter/matrix.hpp"

namespace parfilter {

// Natural cubic spline basis with df columns, evaluated at each input value.
// Knots sit at the df+1 equally spaced quantiles (levels j/df, linear
// interpolation between order statistics) of the inputs. The basis spans
// {x, truncated-cubic terms} with linearity enforced beyond the boundary
// knots; the constant function is excluded, since downstream models carry
// their own intercept. Throws ValidationError when df < 2 or the inputs
// yield fewer distinct knots than required.
Matrix natural_cubic_basis(std::span<const double> values, int df);

}  // namespace parfilter
