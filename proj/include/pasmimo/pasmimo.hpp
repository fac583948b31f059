// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pasmimo/ccdm.hpp"
#include "pasmimo/channel.hpp"
#include "pasmimo/constellation.hpp"
#include "pasmimo/detect.hpp"
#include "pasmimo/ldpc.hpp"
#include "pasmimo/pas.hpp"
#include "pasmimo/sim.hpp"
