#pragma once

#include "opgp/annihilator.hpp"
#include "opgp/constraint_baseline.hpp"
#include "opgp/constraint_check.hpp"
#include "opgp/csv.hpp"
#include "opgp/errors.hpp"
#include "opgp/experiment.hpp"
#include "opgp/gp.hpp"
#include "opgp/kernel.hpp"
#include "opgp/matrix_kernel.hpp"
#include "opgp/model_io.hpp"
#include "opgp/nelder_mead.hpp"
#include "opgp/operator_algebra.hpp"
#include "opgp/operator_json.hpp"
#include "opgp/se_kernel.hpp"
