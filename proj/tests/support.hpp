#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "dtk/core.hpp"
#include "dtk/kernels.hpp"

namespace dtk::test {

/// Four subranges of four; the subrange maxima are 3012, 2313, 3210 and 2321.
inline const std::vector<Value> kExample = {2001, 101,  1323, 3012, 1500, 2313, 876,  1200,
                                            3000, 3010, 1002, 3210, 2321, 999,  1654, 2100};

/// k largest values, non-increasing.
inline std::vector<Value> top_values(std::span<const Value> v, std::size_t k) {
  std::vector<Value> s(v.begin(), v.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  s.resize(k);
  return s;
}

template <class T>
std::vector<Value> sorted_values(const std::vector<T>& xs) {
  std::vector<Value> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(value_of(x));
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

inline std::vector<Value> random_values(std::size_t n, std::uint64_t seed, Value lo = 0,
                                        Value hi = std::numeric_limits<Value>::max()) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Value> dist(lo, hi);
  std::vector<Value> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline std::vector<KeyedEntry> keyed(std::span<const Value> v) {
  std::vector<KeyedEntry> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = {v[i], static_cast<std::uint32_t>(i)};
  return out;
}

/// True when `sub` is contained in `super`, both as multisets.
inline bool multiset_contains(std::vector<Value> super, std::vector<Value> sub) {
  std::sort(super.begin(), super.end());
  std::sort(sub.begin(), sub.end());
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dtk_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

}  // namespace dtk::test
