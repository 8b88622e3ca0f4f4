#ifndef ANISOVA_PARALLEL_HPP_
#define ANISOVA_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace anisova {

// Worker count: ANISOVA_THREADS if set and positive, else hardware
// concurrency.
int ThreadCount();

// Runs body(chunk) for chunk in [0, num_chunks). Chunks are claimed
// dynamically; callers keep results per chunk so the outcome does not depend
// on scheduling.
void ParallelFor(std::size_t num_chunks,
                 const std::function<void(std::size_t)>& body);

}  // namespace anisova

#endif  // ANISOVA_PARALLEL_HPP_
