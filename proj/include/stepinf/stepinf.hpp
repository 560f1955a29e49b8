#ifndef STEPINF_STEPINF_HPP
#define STEPINF_STEPINF_HPP

#include "stepinf/constraints.hpp"
#include "stepinf/dataset.hpp"
#include "stepinf/errors.hpp"
#include "stepinf/inference.hpp"
#include "stepinf/intervals.hpp"
#include "stepinf/linalg.hpp"
#include "stepinf/quartic.hpp"
#include "stepinf/report.hpp"
#include "stepinf/rng.hpp"
#include "stepinf/simulate.hpp"
#include "stepinf/slice_geometry.hpp"
#include "stepinf/special_functions.hpp"
#include "stepinf/stepwise.hpp"

#endif
