#pragma once

// Umbrella header.

#include "ascent/bench.hpp"
#include "ascent/error.hpp"
#include "ascent/fields.hpp"
#include "ascent/io.hpp"
#include "ascent/kdtree.hpp"
#include "ascent/learned.hpp"
#include "ascent/mesh.hpp"
#include "ascent/metrics.hpp"
#include "ascent/noise.hpp"
#include "ascent/point_cloud.hpp"
#include "ascent/shapes.hpp"
#include "ascent/solver.hpp"
#include "ascent/version.hpp"
