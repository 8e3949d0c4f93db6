#pragma once

#include "texspect/checkpoint.hpp"
#include "texspect/config.hpp"
#include "texspect/directional.hpp"
#include "texspect/discriminator.hpp"
#include "texspect/generator.hpp"
#include "texspect/image.hpp"
#include "texspect/inspection.hpp"
#include "texspect/layers.hpp"
#include "texspect/metrics.hpp"
#include "texspect/model.hpp"
#include "texspect/synth.hpp"
#include "texspect/tensor.hpp"
#include "texspect/training.hpp"
