// Umbrella header.
#pragma once

#include "ducktrap/analysis.hpp"
#include "ducktrap/blowup.hpp"
#include "ducktrap/core.hpp"
#include "ducktrap/errors.hpp"
#include "ducktrap/geometry.hpp"
#include "ducktrap/integrate.hpp"
#include "ducktrap/io.hpp"
#include "ducktrap/rk.hpp"
#include "ducktrap/scenario.hpp"
