#pragma once

#include "attach_stobj/bench.hpp"
#include "attach_stobj/fuzz.hpp"
#include "attach_stobj/loader.hpp"
#include "attach_stobj/memory.hpp"
#include "attach_stobj/registry.hpp"
#include "attach_stobj/rng.hpp"
