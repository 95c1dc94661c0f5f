#pragma once

#include "vpace/auctions.hpp"
#include "vpace/distribution.hpp"
#include "vpace/dual.hpp"
#include "vpace/equilibrium.hpp"
#include "vpace/instance.hpp"
#include "vpace/reference_distributions.hpp"
