#pragma once

// Umbrella header: the whole edge-by-patch-consensus toolkit.

#include "tep/cli.hpp"
#include "tep/config.hpp"
#include "tep/consensus.hpp"
#include "tep/diffusion.hpp"
#include "tep/errors.hpp"
#include "tep/image.hpp"
#include "tep/image_io.hpp"
#include "tep/manifest.hpp"
#include "tep/morphology.hpp"
#include "tep/random_field.hpp"
#include "tep/response.hpp"
#include "tep/segmentation.hpp"
#include "tep/version.hpp"
