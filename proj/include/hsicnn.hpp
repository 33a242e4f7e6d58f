#pragma once

#include "hsicnn/checkpoint.hpp"
#include "hsicnn/dimred.hpp"
#include "hsicnn/error.hpp"
#include "hsicnn/ingest.hpp"
#include "hsicnn/layers.hpp"
#include "hsicnn/metrics.hpp"
#include "hsicnn/model.hpp"
#include "hsicnn/optim.hpp"
#include "hsicnn/patches.hpp"
#include "hsicnn/pipeline.hpp"
#include "hsicnn/rng.hpp"
#include "hsicnn/synthetic.hpp"
#include "hsicnn/tensor.hpp"
#include "hsicnn/train.hpp"
