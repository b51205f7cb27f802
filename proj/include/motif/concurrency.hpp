#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace motif {

// Failures collected from a parallel_for run, ordered by task index so the
// aggregate message is independent of scheduling.
class AggregateError : public std::runtime_error {
 public:
  AggregateError(std::string what, std::vector<std::pair<std::size_t, std::string>> failures)
      : std::runtime_error(std::move(what)), failures_(std::move(failures)) {}

  const std::vector<std::pair<std::size_t, std::string>>& failures() const { return failures_; }

 private:
  std::vector<std::pair<std::size_t, std::string>> failures_;
};

// Runs fn(0..count-1) with at most `parallelism` tasks in flight. All tasks
// run to completion even when some fail; failures are then reported together,
// sorted by index. Results must be written into caller-owned per-index slots,
// which keeps output independent of completion order.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t parallelism, Fn&& fn) {
  if (count == 0) return;
  if (parallelism < 1) parallelism = 1;
  std::size_t workers = std::min(parallelism, count);

  std::mutex failures_mutex;
  std::vector<std::pair<std::size_t, std::string>> failures;

  auto record_failure = [&](std::size_t index, const char* what) {
    std::lock_guard<std::mutex> lock(failures_mutex);
    failures.emplace_back(index, what);
  };

  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        record_failure(i, e.what());
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= count) return;
          try {
            fn(i);
          } catch (const std::exception& e) {
            record_failure(i, e.what());
          }
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    std::string what = std::to_string(failures.size()) + " of " + std::to_string(count) +
                       " tasks failed; first: task " + std::to_string(failures.front().first) +
                       ": " + failures.front().second;
    throw AggregateError(std::move(what), std::move(failures));
  }
}

}  // namespace motif
