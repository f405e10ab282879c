#pragma once

// Umbrella header: stopping-time embeddings of finite-support discrete-time
// martingales and non-negative supermartingales into simulated Brownian
// motion, plus the local-time identity checks built on them.

#include "skembed/brownian_path.hpp"
#include "skembed/discrete_distribution.hpp"
#include "skembed/embedding.hpp"
#include "skembed/experiment.hpp"
#include "skembed/local_time.hpp"
#include "skembed/philox.hpp"
#include "skembed/process_spec.hpp"
#include "skembed/report.hpp"
#include "skembed/runner.hpp"
#include "skembed/split_tree.hpp"
#include "skembed/stats.hpp"
#include "skembed/super_embed.hpp"
#include "skembed/super_plan.hpp"
