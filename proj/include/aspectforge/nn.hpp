// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "aspectforge/nn/activations.hpp"
#include "aspectforge/nn/conv.hpp"
#include "aspectforge/nn/dense.hpp"
#include "aspectforge/nn/embedding.hpp"
#include "aspectforge/nn/gradient_check.hpp"
#include "aspectforge/nn/init.hpp"
#include "aspectforge/nn/recurrent.hpp"
#include "aspectforge/nn/regularization.hpp"
#include "aspectforge/nn/types.hpp"
