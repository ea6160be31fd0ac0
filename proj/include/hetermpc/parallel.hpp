#pragma once

namespace hetermpc {

/// Worker threads available to parallel regions: OpenMP's maximum, capped by
/// HETERMPC_THREADS when that variable holds a positive integer.
int worker_threads();

/// Applies the HETERMPC_THREADS cap to the OpenMP runtime.
void apply_thread_limit();

/// True when called from inside an active parallel region.
bool in_parallel_region();

}  // namespace hetermpc
