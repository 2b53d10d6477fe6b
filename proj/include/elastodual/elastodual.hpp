#pragma once
// Umbrella header.

#include "elastodual/error.hpp"
#include "elastodual/tensor_core.hpp"
#include "elastodual/grid.hpp"
#include "elastodual/field_io.hpp"
#include "elastodual/model.hpp"
#include "elastodual/primal.hpp"
#include "elastodual/conjugates.hpp"
#include "elastodual/feasibility.hpp"
#include "elastodual/dual_solver.hpp"
#include "elastodual/optimality.hpp"
