#include "actseq/common.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace actseq {

namespace {
std::atomic<unsigned> g_workers{1};
}

unsigned default_workers() { return g_workers.load(); }

void set_default_workers(unsigned n) { g_workers.store(n == 0 ? 1 : n); }

void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const unsigned count = static_cast<unsigned>(
      std::min<std::size_t>(workers, n));
  threads.reserve(count);
  for (unsigned t = 0; t < count; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace actseq
