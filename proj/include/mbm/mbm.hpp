#pragma once

#include "mbm/core.hpp"
#include "mbm/cost_matrix.hpp"
#include "mbm/estimation.hpp"
#include "mbm/filter.hpp"
#include "mbm/gibbs.hpp"
#include "mbm/models.hpp"
#include "mbm/ospa.hpp"
#include "mbm/params.hpp"
#include "mbm/phd.hpp"
#include "mbm/sim.hpp"
