#pragma once

/** \file delegate.hpp
 *  \brief Delegate vector construction: split V into 2^alpha-element
 *         subranges and keep the beta largest values of each.
 */

#include <cstddef>
#include <span>
#include <vector>

#include "dtk/core.hpp"
#include "dtk/kernels.hpp"

namespace dtk {

/// beta entries per subrange, stored contiguously and non-increasing by value,
/// each tagged with its subrange id. A short final subrange with fewer than
/// beta elements is padded with zero-valued entries.
struct DelegateVector {
  std::vector<KeyedEntry> entries;
  unsigned alpha = 0;
  unsigned beta = 1;
  std::size_t subrange_count = 0;
};

/// Largest alpha handled by the blocked small-subrange path.
inline constexpr unsigned kBlockedMaxAlpha = 5;
/// Subranges processed together by one blocked task.
inline constexpr std::size_t kBlockSubranges = 32;

struct DelegateOptions {
  unsigned threads = 0;
  Counters* counters = nullptr;
};

/// One pass over v; each subrange keeps its top-beta in an insertion ladder.
DelegateVector extract_delegates(std::span<const Value> v, unsigned alpha, unsigned beta,
                                 const DelegateOptions& opts = {});

/// Same output as extract_delegates for alpha <= 5. Copies 32 consecutive
/// subranges into a block buffer, then advances all 32 ladders in lockstep,
/// one element of every subrange per step.
DelegateVector extract_delegates_blocked(std::span<const Value> v, unsigned alpha, unsigned beta,
                                         const DelegateOptions& opts = {});

/// Picks the blocked path for alpha <= 5 and the plain path otherwise.
DelegateVector build_delegates(std::span<const Value> v, unsigned alpha, unsigned beta,
                               const DelegateOptions& opts = {});

}  // namespace dtk
