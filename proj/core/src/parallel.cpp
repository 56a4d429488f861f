#include "ctis/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ctis {
namespace {

std::atomic<std::size_t> g_threads{0};

}  // namespace

void set_thread_count(std::size_t threads) { g_threads.store(threads); }

std::size_t thread_count() {
  const std::size_t t = g_threads.load();
  if (t != 0) return t;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::size_t chunk_count(std::size_t n, std::size_t min_chunk) {
  if (n == 0) return 0;
  return std::clamp<std::size_t>(n / std::max<std::size_t>(1, min_chunk), 1, thread_count());
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& body,
                  std::size_t min_chunk) {
  const std::size_t chunks = chunk_count(n, min_chunk);
  if (chunks == 0) return;
  if (chunks == 1) {
    body(0, n, 0);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = n * c / chunks;
    const std::size_t end = n * (c + 1) / chunks;
    workers.emplace_back([&, begin, end, c] {
      try {
        body(begin, end, c);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace ctis
