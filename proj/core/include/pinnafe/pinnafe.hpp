#pragma once

// Umbrella header for the whole library.

#include "pinnafe/adam.hpp"
#include "pinnafe/collocation.hpp"
#include "pinnafe/config.hpp"
#include "pinnafe/density.hpp"
#include "pinnafe/engine.hpp"
#include "pinnafe/errors.hpp"
#include "pinnafe/feature_pool.hpp"
#include "pinnafe/icnn.hpp"
#include "pinnafe/image.hpp"
#include "pinnafe/irdr.hpp"
#include "pinnafe/jet.hpp"
#include "pinnafe/lbfgs.hpp"
#include "pinnafe/ma_loss.hpp"
#include "pinnafe/model.hpp"
#include "pinnafe/ot1d.hpp"
#include "pinnafe/parallel.hpp"
#include "pinnafe/presets.hpp"
#include "pinnafe/problem.hpp"
#include "pinnafe/register2d.hpp"
#include "pinnafe/rng.hpp"
#include "pinnafe/trainer.hpp"
