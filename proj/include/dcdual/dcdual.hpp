#pragma once

#include "dcdual/errors.hpp"
#include "dcdual/case_model.hpp"
#include "dcdual/ptdf.hpp"
#include "dcdual/canonical.hpp"
#include "dcdual/dual_core.hpp"
#include "dcdual/optimizers.hpp"
#include "dcdual/presets.hpp"
#include "dcdual/oracle.hpp"
