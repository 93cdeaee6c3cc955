#pragma once

#include <functional>

namespace riswb {

// Worker count: explicit argument wins; otherwise the RISWB_WORKERS
// environment variable; otherwise hardware concurrency.
int resolve_worker_count(int requested = 0);

// Runs fn(i) for i in [0, n) on a small thread pool. Results must be written
// to disjoint slots by index so the reduction order stays deterministic.
void parallel_for_indexed(int n, int workers, const std::function<void(int)>& fn);

}  // namespace riswb
