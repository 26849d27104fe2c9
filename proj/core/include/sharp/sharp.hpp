#pragma once

#include "sharp/adam.hpp"
#include "sharp/autodiff.hpp"
#include "sharp/dataset.hpp"
#include "sharp/distributions.hpp"
#include "sharp/geometry.hpp"
#include "sharp/hash.hpp"
#include "sharp/metrics.hpp"
#include "sharp/model_io.hpp"
#include "sharp/network.hpp"
#include "sharp/pseudolabels.hpp"
#include "sharp/rng.hpp"
#include "sharp/tensor.hpp"
