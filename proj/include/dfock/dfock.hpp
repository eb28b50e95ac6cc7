#pragma once

// Everything: operators, deformed basis, states, statistics, sweeps.

#include "dfock/errors.hpp"
#include "dfock/params.hpp"
#include "dfock/fock_numerics.hpp"
#include "dfock/deformed_basis.hpp"
#include "dfock/states.hpp"
#include "dfock/statistics.hpp"
#include "dfock/sweep.hpp"
