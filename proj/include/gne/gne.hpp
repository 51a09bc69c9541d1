#pragma once

#include "gne/types.hpp"
#include "gne/graph.hpp"
#include "gne/game.hpp"
#include "gne/state.hpp"
#include "gne/dynamics.hpp"
#include "gne/kkt.hpp"
#include "gne/sim.hpp"
#include "gne/monotonicity.hpp"
#include "gne/oracle.hpp"
#include "gne/equilibrium.hpp"
#include "gne/conditions.hpp"
