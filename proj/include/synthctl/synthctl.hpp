#pragma once

#include "synthctl/error.hpp"
#include "synthctl/panel.hpp"
#include "synthctl/solver.hpp"
#include "synthctl/estimator.hpp"
#include "synthctl/inference.hpp"
#include "synthctl/robustness.hpp"
#include "synthctl/fixtures.hpp"
#include "synthctl/svg.hpp"
#include "synthctl/pipeline.hpp"
