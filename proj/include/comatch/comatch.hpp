#pragma once

#include "comatch/core.hpp"
#include "comatch/corpus.hpp"
#include "comatch/embedding.hpp"
#include "comatch/errors.hpp"
#include "comatch/fusion.hpp"
#include "comatch/matcher.hpp"
#include "comatch/protoem.hpp"
#include "comatch/prototypes.hpp"
#include "comatch/random.hpp"
#include "comatch/serialization.hpp"
#include "comatch/service.hpp"
#include "comatch/simulation.hpp"
#include "comatch/simulators.hpp"
