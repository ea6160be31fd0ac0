#include "hetermpc/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include <omp.h>

namespace hetermpc {

namespace {
int env_thread_cap() {
  const char* value = std::getenv("HETERMPC_THREADS");
  if (value == nullptr) return 0;
  try {
    return std::max(0, std::stoi(value));
  } catch (const std::exception&) {
    return 0;
  }
}
}  // namespace

int worker_threads() {
  const int cap = env_thread_cap();
  const int available = omp_get_max_threads();
  return cap > 0 ? std::min(cap, available) : available;
}

void apply_thread_limit() {
  const int cap = env_thread_cap();
  if (cap > 0) omp_set_num_threads(std::min(cap, omp_get_max_threads()));
}

bool in_parallel_region() { return omp_in_parallel() != 0; }

}  // namespace hetermpc
