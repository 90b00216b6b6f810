#pragma once

#include "hashlane/bench.hpp"
#include "hashlane/core.hpp"
#include "hashlane/encoders.hpp"
#include "hashlane/error.hpp"
#include "hashlane/index.hpp"
#include "hashlane/io.hpp"
#include "hashlane/linalg.hpp"
#include "hashlane/search.hpp"
#include "hashlane/synthetic.hpp"
