#pragma once

#include "spanex/autograd.hpp"
#include "spanex/candidates.hpp"
#include "spanex/config.hpp"
#include "spanex/corpus.hpp"
#include "spanex/encoder.hpp"
#include "spanex/error.hpp"
#include "spanex/evaluation.hpp"
#include "spanex/fusion.hpp"
#include "spanex/model.hpp"
#include "spanex/parameters.hpp"
#include "spanex/random.hpp"
#include "spanex/training.hpp"
#include "spanex/types.hpp"
