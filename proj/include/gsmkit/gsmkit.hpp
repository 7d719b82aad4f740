#pragma once

// Umbrella header.

#include "gsmkit/array.hpp"
#include "gsmkit/characteristic.hpp"
#include "gsmkit/compression.hpp"
#include "gsmkit/config.hpp"
#include "gsmkit/core.hpp"
#include "gsmkit/geometry.hpp"
#include "gsmkit/gsm.hpp"
#include "gsmkit/io.hpp"
#include "gsmkit/mesh.hpp"
#include "gsmkit/mom.hpp"
#include "gsmkit/sphwave.hpp"
#include "gsmkit/translation.hpp"
#include "gsmkit/verify.hpp"
#include "gsmkit/waveguide.hpp"
