#pragma once

#include <functional>

namespace fsd {

/// Worker count used when a call passes threads <= 0. Defaults to the
/// hardware concurrency.
int default_thread_count();
void set_default_thread_count(int threads);

/// Run fn(i) for every i in [begin, end). Indices are split into contiguous
/// chunks, one per worker; callers must only write to slots owned by i.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(int begin, int end, const std::function<void(int)>& fn, int threads = 0);

}  // namespace fsd
