#pragma once

#include "nqs/cli/report.hpp"
#include "nqs/cli/scenario.hpp"

namespace nqs::cli {

struct RunOptions {
  int jobs = 1;
  bool timing = false;  // wall times make output non-reproducible
};

/// Runs every task; a failing task is recorded and does not stop the
/// others. Results follow the declared task order for any job count.
Report run_tasks(const Scenario& scenario, const RunOptions& options = {});

/// Single task, for tests and embedding.
TaskResult run_task(const Scenario& scenario, const TaskSpec& task);

}  // namespace nqs::cli
