#pragma once

#include <functional>

namespace stai {

// process-wide worker cap for the parallel helpers (the CLI --threads flag)
void set_max_threads(int n);
int max_threads();

/// Static-partition parallel loop over [0, n). Results must not depend on
/// scheduling; callers write to disjoint slots.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace stai
