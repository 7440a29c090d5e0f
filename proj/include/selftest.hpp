#pragma once

#include "selftest/error.hpp"
#include "selftest/tensor.hpp"
#include "selftest/strategy.hpp"
#include "selftest/random.hpp"
#include "selftest/operators.hpp"
#include "selftest/schmidt.hpp"
#include "selftest/metrics.hpp"
#include "selftest/naimark.hpp"
#include "selftest/dilation.hpp"
#include "selftest/parallel.hpp"
#include "selftest/lab.hpp"
#include "selftest/io.hpp"
