#pragma once

// Umbrella header: the whole library.

#include "hpmixer/checkpoint.hpp"
#include "hpmixer/common.hpp"
#include "hpmixer/config_io.hpp"
#include "hpmixer/cycle.hpp"
#include "hpmixer/data.hpp"
#include "hpmixer/gradcheck.hpp"
#include "hpmixer/model.hpp"
#include "hpmixer/nn.hpp"
#include "hpmixer/ops.hpp"
#include "hpmixer/optim.hpp"
#include "hpmixer/params.hpp"
#include "hpmixer/patching.hpp"
#include "hpmixer/rng.hpp"
#include "hpmixer/synthetic.hpp"
#include "hpmixer/tape.hpp"
#include "hpmixer/tensor.hpp"
#include "hpmixer/trainer.hpp"
