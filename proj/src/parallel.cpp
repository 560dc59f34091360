#include "dlab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace dlab {

int thread_count() {
  if (const char* env = std::getenv("DLAB_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int chunk_count(std::size_t n) {
  return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(thread_count(), n)));
}

void parallel_chunks(std::size_t n, const std::function<void(int, std::size_t, std::size_t)>& fn) {
  const int k = chunk_count(n);
  auto bounds = [&](int c) { return std::pair<std::size_t, std::size_t>(n * c / k, n * (c + 1) / k); };
  if (k == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> workers;
  for (int c = 1; c < k; ++c) {
    auto [b, e] = bounds(c);
    workers.emplace_back(fn, c, b, e);
  }
  auto [b, e] = bounds(0);
  fn(0, b, e);
  for (auto& w : workers) w.join();
}

}  // namespace dlab
