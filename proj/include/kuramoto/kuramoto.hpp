#pragma once

#include "kuramoto/common.hpp"
#include "kuramoto/continuum.hpp"
#include "kuramoto/coupling.hpp"
#include "kuramoto/csv.hpp"
#include "kuramoto/discretization.hpp"
#include "kuramoto/harness.hpp"
#include "kuramoto/measures.hpp"
#include "kuramoto/momentsys.hpp"
#include "kuramoto/orthopoly.hpp"
#include "kuramoto/oscillators.hpp"
#include "kuramoto/rk4.hpp"
#include "kuramoto/rng.hpp"
