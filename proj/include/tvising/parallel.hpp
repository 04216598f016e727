#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace tvising {

/// Runs body(k) for k in [0, count) on up to `workers` threads. Results must
/// be written to per-index slots, so output never depends on scheduling. The
/// first exception (lowest index) is rethrown after all workers finish.
template <class Body>
void parallel_for(int count, int workers, Body&& body) {
  workers = std::clamp(workers, 1, std::max(count, 1));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(count, 0)));
  if (workers == 1) {
    for (int k = 0; k < count; ++k) {
      try {
        body(k);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int k = next++; k < count; k = next++) {
          try {
            body(k);
          } catch (...) {
            errors[static_cast<std::size_t>(k)] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace tvising
