#pragma once

#include "taskbench/executor.hpp"
#include "taskbench/graph.hpp"
#include "taskbench/kernels.hpp"
#include "taskbench/metg.hpp"
#include "taskbench/mix.hpp"
#include "taskbench/record.hpp"
#include "taskbench/run_result.hpp"
#include "taskbench/validation.hpp"
