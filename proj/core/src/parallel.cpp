#include "fsd/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fsd {
namespace {

std::atomic<int> g_default_threads{0};
// Nested calls run inline on the calling worker.
thread_local bool t_inside_worker = false;

}  // namespace

int default_thread_count() {
  const int configured = g_default_threads.load();
  if (configured > 0) return configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_thread_count(int threads) { g_default_threads.store(std::max(0, threads)); }

void parallel_for(int begin, int end, const std::function<void(int)>& fn, int threads) {
  const int n = end - begin;
  if (n <= 0) return;
  int workers = threads > 0 ? threads : default_thread_count();
  workers = std::min(workers, n);
  if (workers <= 1 || t_inside_worker) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  const int chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      t_inside_worker = true;
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  pool.clear();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fsd
