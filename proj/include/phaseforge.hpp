#pragma once

#include "phaseforge/numerics.hpp"
#include "phaseforge/rng.hpp"
#include "phaseforge/problem.hpp"
#include "phaseforge/spectral_init.hpp"
#include "phaseforge/altproj.hpp"
#include "phaseforge/experiments.hpp"
#include "phaseforge/theory_checks.hpp"
