#pragma once

#include "error.hpp"
#include "estimators.hpp"
#include "gamma2.hpp"
#include "generators.hpp"
#include "gff.hpp"
#include "network.hpp"
#include "network_io.hpp"
#include "random.hpp"
#include "resistance.hpp"
#include "stats.hpp"
#include "walk.hpp"
