#include "weylscope/parallel.hpp"

namespace weylscope {

namespace {
std::atomic<unsigned> g_thread_limit{0};
}

void set_thread_limit(unsigned limit) { g_thread_limit = limit; }

unsigned thread_limit() {
  const unsigned limit = g_thread_limit;
  if (limit != 0) return limit;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace weylscope
