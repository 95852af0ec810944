#pragma once

#include <cstddef>
#include <functional>

namespace fbmvar {

// Runs body(i) for i = 0..count-1 on `workers` threads, claiming indices
// from a shared atomic counter. With workers <= 1 everything runs on the
// calling thread. The first exception thrown by any body is rethrown on
// the caller after all threads have joined. body must be safe to call
// concurrently for distinct indices.
void run_indexed_tasks(std::size_t count, unsigned workers,
                       const std::function<void(std::size_t)>& body);

} // namespace fbmvar
