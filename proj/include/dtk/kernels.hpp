#pragma once

/** \file kernels.hpp
 *  \brief Standalone top-k algorithms: in-place MSD radix, bucket and bitonic
 *         top-k, plus the sort-and-choose and priority-queue baselines.
 *
 *  Radix and bucket top-k work in place: every pass re-scans the whole input
 *  with a qualification predicate instead of copying candidates. Both run on
 *  plain values or on KeyedEntry pairs whose tag is carried through untouched.
 */

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dtk/core.hpp"

namespace dtk {

/// A value plus an opaque payload (the subrange id in delegate vectors).
struct KeyedEntry {
  Value value = 0;
  std::uint32_t tag = 0;

  bool operator==(const KeyedEntry&) const = default;
};

inline Value value_of(Value v) noexcept { return v; }
inline Value value_of(const KeyedEntry& e) noexcept { return e.value; }

/// Determined-digit state of MSD radix selection at the start of a pass.
struct RadixState {
  Value prefix_bits = 0;
  Value prefix_mask = 0;
  unsigned pass_index = 0;
  std::size_t remaining_k = 0;

  bool qualifies(Value e) const noexcept { return (e & prefix_mask) == prefix_bits; }
};

/// One refinement step of bucket top-k.
struct BucketStep {
  Value range_lo = 0;  ///< inclusive value range being split
  Value range_hi = 0;
  std::size_t target_bucket = 0;
  std::size_t target_count = 0;  ///< elements in the target bucket
  Value bucket_lo = 0;           ///< integer bounds of the target bucket
  Value bucket_hi = 0;
};

struct KernelOptions {
  /// Stop one refinement pass early and return a superset of the top-k.
  bool skip_last = false;
  /// Return every element >= threshold instead of exactly k (ties kept).
  bool keep_ties = false;
  unsigned num_buckets = 256;  ///< bucket top-k only
  unsigned threads = 0;
  Counters* counters = nullptr;
  std::vector<RadixState>* radix_trace = nullptr;
  std::vector<BucketStep>* bucket_trace = nullptr;
};

template <class T>
struct Selection {
  std::vector<T> selected;
  /// Exact k-th value, or with skip_last the minimum of `selected`.
  Value threshold = 0;
  /// Lower bound of the refinement bucket known to hold the k-th value
  /// (equals threshold when the selection is exact).
  Value bucket_lower_bound = 0;
  /// Histogram passes (radix), or passes over the input before extraction
  /// (bucket: the min/max scan plus one per refinement).
  unsigned iterations = 0;
};

template <class T>
Selection<T> radix_topk(std::span<const T> v, std::size_t k, const KernelOptions& opts = {});

template <class T>
Selection<T> bucket_topk(std::span<const T> v, std::size_t k, const KernelOptions& opts = {});

struct BitonicTrace {
  /// Live length before the first merge round and after every round.
  std::vector<std::size_t> live_lengths;
  bool keep_snapshots = false;
  /// Live vector after every round (only when keep_snapshots).
  std::vector<std::vector<Value>> snapshots;
};

struct BitonicOptions {
  unsigned threads = 0;
  Counters* counters = nullptr;
  BitonicTrace* trace = nullptr;
};

/// Exact top-k through a bitonic reduction network. k must be a power of two;
/// the input is padded with zeros up to a power of two.
std::vector<Value> bitonic_topk(std::span<const Value> v, std::size_t k,
                                const BitonicOptions& opts = {});

/// Baseline: full descending sort, then take the first k.
TopKResult sort_and_choose(std::span<const Value> v, std::size_t k);

/// Baseline: size-k min-heap slid over the input.
TopKResult heap_topk(std::span<const Value> v, std::size_t k);

/// Exact top-k of v with a backend run directly on the input (no delegation).
/// Returned values are non-increasing.
TopKResult backend_topk(std::span<const Value> v, std::size_t k, Backend backend,
                        unsigned threads = 0, Counters* counters = nullptr);

}  // namespace dtk
