#pragma once

#include <cstddef>
#include <functional>

namespace hypermosaic {

// Runs body(i) for i in [0, count) on up to hardware_concurrency threads.
// Each index must write only its own output slot; callers reduce afterwards
// in index order, so results are independent of the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// 0 means "use hardware_concurrency"
void set_thread_count(unsigned threads);
unsigned thread_count();

}  // namespace hypermosaic
