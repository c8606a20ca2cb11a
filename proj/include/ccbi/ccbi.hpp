#pragma once

#include "ccbi/bayes.hpp"
#include "ccbi/chance_constraint.hpp"
#include "ccbi/diagnostics.hpp"
#include "ccbi/errors.hpp"
#include "ccbi/gpc.hpp"
#include "ccbi/heat_interface.hpp"
#include "ccbi/hermite.hpp"
#include "ccbi/model_params.hpp"
#include "ccbi/porous_flow.hpp"
#include "ccbi/random.hpp"
#include "ccbi/samplers.hpp"
