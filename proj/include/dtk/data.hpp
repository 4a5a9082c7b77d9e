#pragma once

/** \file data.hpp
 *  \brief Seeded synthetic datasets and the DTKV binary vector file.
 *
 *  DTKV layout, all little-endian:
 *    offset 0   4 bytes  magic "DTKV"
 *    offset 4   u32      version (1)
 *    offset 8   u64      element count
 *    offset 16  count x u32 payload
 */

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dtk/core.hpp"

namespace dtk {

enum class Distribution { uniform, normal, customized };

Distribution parse_distribution(std::string_view name);  ///< "ud" | "nd" | "cd"
std::string_view to_string(Distribution d) noexcept;

/// U[0, 2^32 - 1]; element i depends only on (seed, i).
std::vector<Value> gen_uniform(std::size_t n, std::uint64_t seed);

/// N(1e8, 10) rounded to the nearest integer and clamped to the u32 range.
std::vector<Value> gen_normal(std::size_t n, std::uint64_t seed);

/// Refinement levels and sentinels per level used by gen_customized.
inline constexpr unsigned kCustomizedDepth = 4;
inline constexpr std::size_t kCustomizedSentinels = kCustomizedDepth * 255;

/// Adversarial input for 256-way refinement. At every 8-bit level one sentinel
/// sits in each non-target digit bucket, and every remaining element sits in
/// the target bucket chain on a single value that is the k-th largest.
/// Fewer than k sentinels lie above that value. Throws InfeasibleN when
/// n < 4 * depth * 255 or k > n - 4 * 255.
std::vector<Value> gen_customized(std::size_t n, std::size_t k, std::uint64_t seed);

std::vector<Value> generate(Distribution d, std::size_t n, std::size_t k, std::uint64_t seed);

inline constexpr std::uint32_t kVectorFileVersion = 1;
inline constexpr std::size_t kVectorFileHeaderBytes = 16;

void write_vector(const std::filesystem::path& path, std::span<const Value> v);

/// Element count from a validated header (also checks the payload length).
std::size_t read_vector_count(const std::filesystem::path& path);

std::vector<Value> read_vector(const std::filesystem::path& path);

/// Elements [offset, offset + length) read directly from their file offset.
std::vector<Value> read_vector_window(const std::filesystem::path& path, std::size_t offset,
                                      std::size_t length);

}  // namespace dtk
