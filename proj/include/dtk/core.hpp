#pragma once

/** \file core.hpp
 *  \brief Domain types, configuration normalization and workload counters
 *         shared by every stage of the delegate top-k pipeline.
 */

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dtk {

/// Element type. Selection is always "largest k" under unsigned order.
using Value = std::uint32_t;

enum class ErrorCode {
  InvalidK,
  EmptyInput,
  InvalidBeta,
  InvalidConfig,
  BadMagic,
  BadVersion,
  TruncatedFile,
  IoError,
  InfeasibleN,
  WorkerFailed,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

enum class Backend { radix, bucket, bitonic };

std::string_view to_string(Backend b) noexcept;
Backend parse_backend(std::string_view name);

/// Pipeline stages, in execution order.
enum class Stage : std::size_t { Delegate = 0, FirstK = 1, Concat = 2, SecondK = 3 };
inline constexpr std::size_t kStageCount = 4;

struct PipelineConfig {
  std::size_t k = 1;
  unsigned alpha = 0;  ///< subrange size is 2^alpha
  unsigned beta = 2;   ///< delegates per subrange
  Backend backend = Backend::radix;
  bool skip_last_iteration = true;
  bool auto_alpha = true;
  double const_c = 3.0;
  /// Number of parallel lanes; 0 means default_lanes().
  unsigned threads = 0;
  /// Set by validate_config when delegation cannot produce k candidates.
  bool direct_fallback = false;

  bool operator==(const PipelineConfig&) const = default;
};

/// Atomic read/write counters filled in by kernels while they run.
struct Counters {
  std::atomic<std::uint64_t> elements_read{0};
  std::atomic<std::uint64_t> elements_written{0};

  void add_read(std::uint64_t n) noexcept {
    elements_read.fetch_add(n, std::memory_order_relaxed);
  }
  void add_written(std::uint64_t n) noexcept {
    elements_written.fetch_add(n, std::memory_order_relaxed);
  }
};

struct WorkloadStats {
  std::size_t delegate_vector_len = 0;
  std::size_t concatenated_len = 0;
  std::size_t fully_qualified_subranges = 0;
  std::size_t partially_qualified_subranges = 0;
  std::size_t subrange_count = 0;
  /// Size of the first top-k output T (at least k; more when relaxed).
  std::size_t first_topk_len = 0;
  /// Concatenated vector plus partial delegates; input of the second top-k.
  std::size_t candidate_pool_len = 0;
  std::uint64_t elements_read = 0;
  std::uint64_t elements_written = 0;
  std::array<std::int64_t, kStageCount> per_stage_nanos{};
  bool direct_fallback = false;
  bool second_topk_skipped = false;

  std::int64_t stage_nanos(Stage s) const { return per_stage_nanos[static_cast<std::size_t>(s)]; }
  std::int64_t total_nanos() const;
};

struct TopKResult {
  std::vector<Value> values;  ///< non-increasing, size k
  Value threshold = 0;        ///< values.back()
  WorkloadStats stats;
};

/// ceil(n / 2^alpha)
std::size_t subrange_count(std::size_t n, unsigned alpha) noexcept;

/// floor(log2(n)); n must be positive.
unsigned floor_log2(std::size_t n) noexcept;

constexpr bool is_power_of_two(std::size_t x) noexcept { return x != 0 && (x & (x - 1)) == 0; }

/// Normalizes cfg for an input of n elements: auto-tunes alpha when asked,
/// clamps alpha to [0, floor(log2 n)] and beta to [1, 2^alpha - 1], and sets
/// direct_fallback when the delegate vector cannot hold k entries.
PipelineConfig validate_config(PipelineConfig cfg, std::size_t n);

/// Lanes used when a config asks for 0: hardware concurrency, capped by the
/// DTK_THREADS environment variable when set.
unsigned default_lanes() noexcept;

inline unsigned resolve_lanes(unsigned requested) noexcept {
  return requested == 0 ? default_lanes() : requested;
}

}  // namespace dtk
