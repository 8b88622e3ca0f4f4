#include "anisova/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace anisova {

int ThreadCount() {
  if (const char* env = std::getenv("ANISOVA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void ParallelFor(std::size_t num_chunks,
                 const std::function<void(std::size_t)>& body) {
  const auto workers = std::min<std::size_t>(
      num_chunks, static_cast<std::size_t>(ThreadCount()));
  if (workers <= 1) {
    for (std::size_t c = 0; c < num_chunks; ++c) body(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::size_t c = next++; c < num_chunks; c = next++) {
      try {
        body(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace anisova
