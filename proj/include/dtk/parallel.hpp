#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace dtk::parallel {

/// Inputs smaller than this run on the calling thread.
inline constexpr std::size_t kMinParallelGrain = 1u << 15;

/// Number of lanes actually used for n items.
inline unsigned effective_lanes(std::size_t n, unsigned lanes) {
  if (lanes <= 1 || n < kMinParallelGrain) return 1;
  return static_cast<unsigned>(std::min<std::size_t>(lanes, n / (kMinParallelGrain / 2)));
}

/// Splits [0, n) into `lanes` contiguous chunks and calls
/// fn(lane, begin, end) for each one. Chunk boundaries depend only on
/// (n, lanes), so per-lane results can be merged deterministically.
/// Exceptions from any lane are rethrown on the caller.
template <class Fn>
void for_each_chunk(std::size_t n, unsigned lanes, Fn&& fn) {
  if (lanes <= 1) {
    fn(0u, std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + lanes - 1) / lanes;
  std::vector<std::exception_ptr> errors(lanes);
  std::vector<std::thread> pool;
  pool.reserve(lanes - 1);
  auto run = [&](unsigned lane) {
    const std::size_t begin = std::min(n, chunk * lane);
    const std::size_t end = std::min(n, begin + chunk);
    try {
      fn(lane, begin, end);
    } catch (...) {
      errors[lane] = std::current_exception();
    }
  };
  for (unsigned lane = 1; lane < lanes; ++lane) pool.emplace_back(run, lane);
  run(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace dtk::parallel
