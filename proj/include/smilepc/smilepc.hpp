#pragma once

#include "smilepc/blackbox.hpp"
#include "smilepc/bridge.hpp"
#include "smilepc/clustering.hpp"
#include "smilepc/error.hpp"
#include "smilepc/explain.hpp"
#include "smilepc/fidelity.hpp"
#include "smilepc/geometry.hpp"
#include "smilepc/perturb.hpp"
#include "smilepc/rng.hpp"
#include "smilepc/shapes.hpp"
#include "smilepc/stability.hpp"
#include "smilepc/stats.hpp"
#include "smilepc/surrogate.hpp"
