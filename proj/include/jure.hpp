#pragma once

#include "jure/alloc.hpp"
#include "jure/checkpoint.hpp"
#include "jure/config.hpp"
#include "jure/data.hpp"
#include "jure/error.hpp"
#include "jure/eval.hpp"
#include "jure/model.hpp"
#include "jure/numerics.hpp"
#include "jure/pipeline.hpp"
#include "jure/random.hpp"
#include "jure/scoring.hpp"
#include "jure/synthetic.hpp"
#include "jure/training.hpp"
