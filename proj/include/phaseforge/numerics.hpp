#pragma once

#include "phaseforge/numerics/complex_vector.hpp"
#include "phaseforge/numerics/conjugate_gradient.hpp"
#include "phaseforge/numerics/dense_matrix.hpp"
#include "phaseforge/numerics/linear_operator.hpp"
#include "phaseforge/numerics/power_iteration.hpp"
