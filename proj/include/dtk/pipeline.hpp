#pragma once

/** \file pipeline.hpp
 *  \brief Delegate-centric top-k: delegates -> first top-k -> filtered
 *         concatenation -> second top-k.
 *
 *  The first top-k runs over the delegate vector D and yields T with
 *  theta = min(T). A subrange whose beta delegates all land in T is fully
 *  qualified and its elements >= theta are concatenated. A subrange with only
 *  some delegates in T contributes exactly those delegates: its remaining
 *  elements are bounded by its unselected delegates, which lie below theta.
 *  Every other subrange is skipped. The union is the candidate pool P, and
 *  P holds every element of V that is >= theta.
 */

#include <cstdint>
#include <span>
#include <vector>

#include "dtk/core.hpp"
#include "dtk/delegate.hpp"
#include "dtk/kernels.hpp"

namespace dtk {

struct QualificationReport {
  /// First top-k output T; every delegate with value >= theta is included,
  /// so |T| >= k when ties or the relaxed pass widen it.
  std::vector<KeyedEntry> selected_delegates;
  Value theta = 0;
  /// Subrange ids (ascending) with all beta delegates in T.
  std::vector<std::uint32_t> fully_qualified;
  /// Entries of T from subranges that are not fully qualified.
  std::vector<KeyedEntry> partial_entries;
  std::size_t partially_qualified_subranges = 0;
};

struct StageOptions {
  unsigned threads = 0;
  Counters* counters = nullptr;
};

QualificationReport first_topk(const DelegateVector& d, std::size_t k, Backend backend,
                               bool skip_last, const StageOptions& opts = {});

/// Elements >= theta of every fully-qualified subrange, compacted through an
/// atomic reservation cursor. Output order is unspecified.
std::vector<Value> concatenate_filtered(std::span<const Value> v, const QualificationReport& report,
                                        unsigned alpha, const StageOptions& opts = {});

/// Concatenated vector plus the values of the partial delegates.
std::vector<Value> candidate_pool(std::vector<Value> concatenated, const QualificationReport& report);

/// Full pipeline. The config is normalized with validate_config first.
TopKResult delegate_topk(std::span<const Value> v, const PipelineConfig& cfg);

}  // namespace dtk
