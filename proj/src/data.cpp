#include "dtk/data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>

#include "dtk/parallel.hpp"

namespace dtk {

namespace {

constexpr std::array<char, 4> kMagic{'D', 'T', 'K', 'V'};

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Counter-based random word for (seed, stream, index).
std::uint64_t draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t i) noexcept {
  return splitmix64(splitmix64(seed ^ (stream * 0xD1B54A32D192ED03ull)) + i);
}

double unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

template <class Fn>
std::vector<Value> fill(std::size_t n, Fn&& value_at) {
  std::vector<Value> v(n);
  parallel::for_each_chunk(n, parallel::effective_lanes(n, default_lanes()),
                           [&](unsigned, std::size_t b, std::size_t e) {
                             for (std::size_t i = b; i < e; ++i) v[i] = value_at(i);
                           });
  return v;
}

std::uint32_t to_le(std::uint32_t x) noexcept {
  if constexpr (std::endian::native == std::endian::little) return x;
  return ((x & 0xFFu) << 24) | ((x & 0xFF00u) << 8) | ((x >> 8) & 0xFF00u) | (x >> 24);
}

void put_u32(char* p, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<char>((x >> (8 * i)) & 0xFF);
}
void put_u64(char* p, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<char>((x >> (8 * i)) & 0xFF);
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= std::uint32_t{p[i]} << (8 * i);
  return x;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= std::uint64_t{p[i]} << (8 * i);
  return x;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

}  // namespace

Distribution parse_distribution(std::string_view name) {
  if (name == "ud") return Distribution::uniform;
  if (name == "nd") return Distribution::normal;
  if (name == "cd") return Distribution::customized;
  throw Error(ErrorCode::InvalidConfig, "unknown distribution '" + std::string(name) + "' (ud|nd|cd)");
}

std::string_view to_string(Distribution d) noexcept {
  switch (d) {
    case Distribution::uniform: return "ud";
    case Distribution::normal: return "nd";
    case Distribution::customized: return "cd";
  }
  return "unknown";
}

std::vector<Value> gen_uniform(std::size_t n, std::uint64_t seed) {
  return fill(n, [seed](std::size_t i) { return static_cast<Value>(draw(seed, 1, i) >> 32); });
}

std::vector<Value> gen_normal(std::size_t n, std::uint64_t seed) {
  constexpr double kMean = 1e8;
  constexpr double kStddev = 10.0;
  return fill(n, [seed](std::size_t i) {
    const double u1 = unit_open(draw(seed, 2, i));
    const double u2 = unit_open(draw(seed, 3, i));
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    const double x = std::round(kMean + kStddev * z);
    return static_cast<Value>(std::clamp(x, 0.0, 4294967295.0));
  });
}

std::vector<Value> gen_customized(std::size_t n, std::size_t k, std::uint64_t seed) {
  constexpr std::size_t kNonTarget = 255;
  if (n < 4 * kCustomizedDepth * kNonTarget)
    throw Error(ErrorCode::InfeasibleN, "customized distribution needs n >= " +
                                            std::to_string(4 * kCustomizedDepth * kNonTarget));
  if (k == 0 || k > n) throw Error(ErrorCode::InvalidK, "customized distribution needs 1 <= k <= n");
  if (k > n - kCustomizedSentinels)
    throw Error(ErrorCode::InfeasibleN, "k too large for the sentinel budget at this n");

  // Target digit t_L = 255 - a_L; exactly a_L sentinels at level L exceed the
  // cluster, and sum(a_L) <= k - 1 keeps the k-th value inside the cluster.
  const std::size_t a_cap = std::min<std::size_t>(kNonTarget, (k - 1) / kCustomizedDepth);
  std::array<Value, kCustomizedDepth> digit{};
  Value target = 0;
  for (unsigned l = 0; l < kCustomizedDepth; ++l) {
    digit[l] = static_cast<Value>(kNonTarget - draw(seed, 10, l) % (a_cap + 1));
    target = (target << 8) | digit[l];
  }

  auto sentinel = [&](std::size_t j) -> Value {
    const unsigned level = static_cast<unsigned>(j / kNonTarget);
    const std::size_t slot = j % kNonTarget;
    const Value d = static_cast<Value>(slot < digit[level] ? slot : slot + 1);
    const unsigned low_bits = 24 - 8 * level;
    const Value prefix = level == 0 ? 0 : (target >> (32 - 8 * level)) << (32 - 8 * level);
    const Value low = low_bits == 0 ? 0 : static_cast<Value>(draw(seed, 11, j) & ((Value{1} << low_bits) - 1));
    return prefix | (d << low_bits) | low;
  };

  // Sentinel j lives at index floor(j * n / S); those indices are distinct since n > S.
  constexpr std::size_t S = kCustomizedSentinels;
  return fill(n, [&](std::size_t i) {
    const std::size_t j = (i * S + n - 1) / n;
    if (j < S && (j * n) / S == i) return sentinel(j);
    return target;
  });
}

std::vector<Value> generate(Distribution d, std::size_t n, std::size_t k, std::uint64_t seed) {
  switch (d) {
    case Distribution::uniform: return gen_uniform(n, seed);
    case Distribution::normal: return gen_normal(n, seed);
    case Distribution::customized: return gen_customized(n, k, seed);
  }
  return {};
}

void write_vector(const std::filesystem::path& path, std::span<const Value> v) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  std::array<char, kVectorFileHeaderBytes> header{};
  std::memcpy(header.data(), kMagic.data(), kMagic.size());
  put_u32(header.data() + 4, kVectorFileVersion);
  put_u64(header.data() + 8, v.size());
  out.write(header.data(), header.size());

  constexpr std::size_t kChunk = 1 << 16;
  std::vector<std::uint32_t> buf(kChunk);
  for (std::size_t at = 0; at < v.size(); at += kChunk) {
    const std::size_t len = std::min(kChunk, v.size() - at);
    for (std::size_t i = 0; i < len; ++i) buf[i] = to_le(v[at + i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(len * 4));
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::size_t read_vector_count(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::array<unsigned char, kVectorFileHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size()))
    throw Error(ErrorCode::TruncatedFile, path.string() + ": header shorter than 16 bytes");
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0)
    throw Error(ErrorCode::BadMagic, path.string() + ": not a DTKV file");
  const std::uint32_t version = get_u32(header.data() + 4);
  if (version != kVectorFileVersion)
    throw Error(ErrorCode::BadVersion, path.string() + ": version " + std::to_string(version));
  const std::uint64_t count = get_u64(header.data() + 8);
  const std::uintmax_t size = std::filesystem::file_size(path);
  const std::uintmax_t expected = kVectorFileHeaderBytes + 4 * count;
  if (size < expected)
    throw Error(ErrorCode::TruncatedFile, path.string() + ": payload holds " +
                                              std::to_string((size - kVectorFileHeaderBytes) / 4) + " of " +
                                              std::to_string(count) + " elements");
  if (size > expected) throw Error(ErrorCode::IoError, path.string() + ": trailing bytes after payload");
  return static_cast<std::size_t>(count);
}

std::vector<Value> read_vector(const std::filesystem::path& path) {
  return read_vector_window(path, 0, read_vector_count(path));
}

std::vector<Value> read_vector_window(const std::filesystem::path& path, std::size_t offset,
                                      std::size_t length) {
  const std::size_t count = read_vector_count(path);
  if (offset > count || length > count - offset)
    throw Error(ErrorCode::TruncatedFile, path.string() + ": window [" + std::to_string(offset) + ", +" +
                                              std::to_string(length) + ") past " + std::to_string(count));
  auto in = open_in(path);
  in.seekg(static_cast<std::streamoff>(kVectorFileHeaderBytes + 4 * offset));
  std::vector<Value> v(length);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(length * 4));
  if (in.gcount() != static_cast<std::streamsize>(length * 4))
    throw Error(ErrorCode::TruncatedFile, path.string() + ": short read");
  for (auto& x : v) x = to_le(x);
  return v;
}

}  // namespace dtk
