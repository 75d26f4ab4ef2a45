#pragma once

// Umbrella header for the qualbench evaluation harness.

#include "qualbench/backend.hpp"
#include "qualbench/cache.hpp"
#include "qualbench/dataset.hpp"
#include "qualbench/errors.hpp"
#include "qualbench/evaluator.hpp"
#include "qualbench/gateway.hpp"
#include "qualbench/http_backend.hpp"
#include "qualbench/mock_backend.hpp"
#include "qualbench/prompt.hpp"
#include "qualbench/reporter.hpp"
#include "qualbench/similarity.hpp"
