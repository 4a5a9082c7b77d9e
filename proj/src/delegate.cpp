#include "dtk/delegate.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <string>
#include <utility>

#include "dtk/parallel.hpp"

namespace dtk {

namespace {

void check_args(std::size_t n, unsigned alpha, unsigned beta) {
  if (n == 0) throw Error(ErrorCode::EmptyInput, "input vector is empty");
  if (alpha >= 32 || (std::size_t{1} << alpha) > n)
    throw Error(ErrorCode::InvalidConfig,
                "subrange size 2^" + std::to_string(alpha) + " exceeds n=" + std::to_string(n));
  if (beta == 0 || beta >= (std::size_t{1} << alpha))
    throw Error(ErrorCode::InvalidBeta,
                "beta=" + std::to_string(beta) + " needs 1 <= beta < 2^" + std::to_string(alpha));
}

/// Branchless top-B insertion: one compare-exchange per slot, kept non-increasing.
template <unsigned B>
inline void insert(Value* top, Value x) noexcept {
  for (unsigned j = 0; j < B; ++j) {
    const Value hi = std::max(top[j], x);
    x = std::min(top[j], x);
    top[j] = hi;
  }
}

/// Fallback for unusually large beta.
struct DynamicLadder {
  std::vector<Value> top;
  unsigned beta;

  explicit DynamicLadder(unsigned b) : top(b, 0), beta(b) {}

  void push(Value x) {
    if (x <= top[beta - 1]) return;
    auto pos = std::upper_bound(top.begin(), top.end(), x, std::greater<>());
    std::copy_backward(pos, top.end() - 1, top.end());
    *pos = x;
  }
};

void emit(const Value* top, unsigned beta, std::size_t subrange, KeyedEntry* out) {
  for (unsigned j = 0; j < beta; ++j) out[j] = KeyedEntry{top[j], static_cast<std::uint32_t>(subrange)};
}

/// Sixteen lanes of values as one vector register (or a few narrower ones).
using Lanes = Value __attribute__((vector_size(64)));
inline constexpr std::size_t kLanes = sizeof(Lanes) / sizeof(Value);

inline Lanes vmax(Lanes a, Lanes b) noexcept { return a > b ? a : b; }
inline Lanes vmin(Lanes a, Lanes b) noexcept { return a < b ? a : b; }

/// Two-input lane permutation; index l < 16 picks a[l], otherwise b[l - 16].
template <class Map, std::size_t... L>
inline Lanes permute(Lanes a, Lanes b, std::index_sequence<L...>) noexcept {
#if defined(__clang__)
  return __builtin_shufflevector(a, b, Map::at(L)...);
#else
  using Index = std::uint32_t __attribute__((vector_size(64)));
  return __builtin_shuffle(a, b, Index{static_cast<std::uint32_t>(Map::at(L))...});
#endif
}

/// Lane i takes lane i + S (upper lanes wrap; they are never read back).
template <std::size_t S>
struct ShiftDown {
  static constexpr std::size_t at(std::size_t l) { return (l + S) & 15; }
};

template <std::size_t S>
inline Lanes shift_down(Lanes a) noexcept {
  return permute<ShiftDown<S>>(a, a, std::make_index_sequence<16>{});
}

template <unsigned B>
inline void insert_lanes(Lanes (&acc)[B], Lanes x) noexcept {
  for (unsigned j = 0; j < B; ++j) {
    const Lanes hi = vmax(acc[j], x);
    x = vmin(acc[j], x);
    acc[j] = hi;
  }
}

/// Merges lane i + S into lane i until lane 0 holds the top B of all lanes.
template <unsigned B, std::size_t S>
inline void fold(Lanes (&acc)[B]) noexcept {
  if constexpr (S > 0) {
    Lanes moved[B];
    for (unsigned q = 0; q < B; ++q) moved[q] = shift_down<S>(acc[q]);
    for (unsigned q = 0; q < B; ++q) insert_lanes<B>(acc, moved[q]);
    fold<B, S / 2>(acc);
  }
}

/// One butterfly of a 16x16 transpose: lanes with (l & Step) == 0 keep the
/// row's own value, the others come from the partner row.
template <std::size_t Step, bool Upper>
struct Interleave {
  static constexpr std::size_t at(std::size_t l) {
    return (l & Step) == 0 ? l + (Upper ? Step : 0) : 16 + l - (Upper ? 0 : Step);
  }
};

template <std::size_t Step, bool Upper>
inline Lanes interleave(Lanes a, Lanes b) noexcept {
  return permute<Interleave<Step, Upper>>(a, b, std::make_index_sequence<16>{});
}

template <std::size_t Step>
inline void transpose_stage(Lanes (&rows)[16]) noexcept {
  for (std::size_t i = 0; i < 16; ++i) {
    if (i & Step) continue;
    const Lanes lo = interleave<Step, false>(rows[i], rows[i + Step]);
    const Lanes hi = interleave<Step, true>(rows[i], rows[i + Step]);
    rows[i] = lo;
    rows[i + Step] = hi;
  }
}

inline void transpose(Lanes (&rows)[16]) noexcept {
  transpose_stage<8>(rows);
  transpose_stage<4>(rows);
  transpose_stage<2>(rows);
  transpose_stage<1>(rows);
}

/// Subranges must hold at least kLanes elements each and be complete.
template <unsigned B>
void plain_group(const Value* base, std::size_t len, std::size_t s0, KeyedEntry* out) {
  Lanes rows[B][16];
  for (std::size_t s = 0; s < 16; ++s) {
    Lanes acc[B] = {};
    const Value* p = base + s * len;
    for (std::size_t i = 0; i < len; i += kLanes) {
      Lanes x;
      std::memcpy(&x, p + i, sizeof(Lanes));
      insert_lanes<B>(acc, x);
    }
    for (unsigned q = 0; q < B; ++q) rows[q][s] = acc[q];
  }
  // After the transpose, lane s of rows[q][w] is slot q of lane w in subrange s.
  for (unsigned q = 0; q < B; ++q) transpose(rows[q]);
  Lanes top[B] = {};
  for (std::size_t w = 0; w < 16; ++w)
    for (unsigned q = 0; q < B; ++q) insert_lanes<B>(top, rows[q][w]);
  for (std::size_t s = 0; s < 16; ++s)
    for (unsigned j = 0; j < B; ++j)
      out[(s0 + s) * B + j] = KeyedEntry{top[j][s], static_cast<std::uint32_t>(s0 + s)};
}

/// Slots start at zero, which doubles as the padding value for subranges
/// shorter than beta. Each lane keeps its own ladder; lanes are folded at the end.
template <unsigned B>
void plain_range(std::span<const Value> v, unsigned alpha, std::size_t first, std::size_t last,
                 KeyedEntry* out) {
  static_assert(kLanes == 16);
  const std::size_t len = std::size_t{1} << alpha;
  std::size_t s = first;
  if (len >= kLanes)
    for (; s + 16 <= last && (s + 16) * len <= v.size(); s += 16) plain_group<B>(v.data() + s * len, len, s, out);
  for (; s < last; ++s) {
    const std::size_t b = s * len;
    const std::size_t e = std::min(v.size(), b + len);
    Value top[B] = {};
    std::size_t i = b;
    if (e - b >= 2 * kLanes) {
      Lanes acc[B] = {};
      for (; i + kLanes <= e; i += kLanes) {
        Lanes x;
        std::memcpy(&x, v.data() + i, sizeof(Lanes));
        insert_lanes<B>(acc, x);
      }
      fold<B, kLanes / 2>(acc);
      for (unsigned j = 0; j < B; ++j) top[j] = acc[j][0];
    }
    for (; i < e; ++i) insert<B>(top, v[i]);
    emit(top, B, s, out + s * B);
  }
}

void plain_dynamic(std::span<const Value> v, unsigned alpha, unsigned beta, std::size_t first,
                   std::size_t last, KeyedEntry* out) {
  const std::size_t len = std::size_t{1} << alpha;
  for (std::size_t s = first; s < last; ++s) {
    DynamicLadder ladder(beta);
    const std::size_t b = s * len;
    const std::size_t e = std::min(v.size(), b + len);
    for (std::size_t i = b; i < e; ++i) ladder.push(v[i]);
    emit(ladder.top.data(), beta, s, out + s * beta);
  }
}

void plain_any(std::span<const Value> v, unsigned alpha, unsigned beta, std::size_t first,
               std::size_t last, KeyedEntry* out) {
  switch (beta) {
    case 1: return plain_range<1>(v, alpha, first, last, out);
    case 2: return plain_range<2>(v, alpha, first, last, out);
    case 3: return plain_range<3>(v, alpha, first, last, out);
    case 4: return plain_range<4>(v, alpha, first, last, out);
    default: return plain_dynamic(v, alpha, beta, first, last, out);
  }
}

/// Stages a block transposed (element j of subrange s at [j][s]) so the
/// 32 ladders advance as one vector step per element position.
template <unsigned B>
void blocked_range(std::span<const Value> v, unsigned alpha, std::size_t first_block,
                   std::size_t last_block, std::size_t subranges, KeyedEntry* out) {
  constexpr std::size_t S = kBlockSubranges;
  const std::size_t len = std::size_t{1} << alpha;
  alignas(64) Value buf[S << kBlockedMaxAlpha];
  for (std::size_t blk = first_block; blk < last_block; ++blk) {
    const std::size_t s0 = blk * S;
    const std::size_t count = std::min(S, subranges - s0);
    const std::size_t b = s0 * len;
    if (count == S && b + S * len <= v.size()) {
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t j = 0; j < len; ++j) buf[j * S + s] = v[b + s * len + j];
    } else {
      // The tail of a short final block reads as zero.
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t j = 0; j < len; ++j) {
          const std::size_t idx = b + s * len + j;
          buf[j * S + s] = s < count && idx < v.size() ? v[idx] : Value{0};
        }
    }

    alignas(64) Value acc[B][S] = {};
    for (std::size_t j = 0; j < len; ++j) {
      for (std::size_t s = 0; s < S; ++s) {
        Value x = buf[j * S + s];
        for (unsigned q = 0; q < B; ++q) {
          const Value hi = std::max(acc[q][s], x);
          x = std::min(acc[q][s], x);
          acc[q][s] = hi;
        }
      }
    }
    for (std::size_t s = 0; s < count; ++s) {
      Value top[B];
      for (unsigned q = 0; q < B; ++q) top[q] = acc[q][s];
      emit(top, B, s0 + s, out + (s0 + s) * B);
    }
  }
}

}  // namespace

DelegateVector extract_delegates(std::span<const Value> v, unsigned alpha, unsigned beta,
                                 const DelegateOptions& opts) {
  check_args(v.size(), alpha, beta);
  DelegateVector d;
  d.alpha = alpha;
  d.beta = beta;
  d.subrange_count = subrange_count(v.size(), alpha);
  d.entries.resize(d.subrange_count * beta);
  const unsigned lanes = parallel::effective_lanes(v.size(), resolve_lanes(opts.threads));
  parallel::for_each_chunk(d.subrange_count, lanes, [&](unsigned, std::size_t b, std::size_t e) {
    plain_any(v, alpha, beta, b, e, d.entries.data());
  });
  if (opts.counters) {
    opts.counters->add_read(v.size());
    opts.counters->add_written(d.entries.size());
  }
  return d;
}

DelegateVector extract_delegates_blocked(std::span<const Value> v, unsigned alpha, unsigned beta,
                                         const DelegateOptions& opts) {
  check_args(v.size(), alpha, beta);
  if (alpha > kBlockedMaxAlpha)
    throw Error(ErrorCode::InvalidConfig, "blocked delegate extraction needs alpha <= 5");
  DelegateVector d;
  d.alpha = alpha;
  d.beta = beta;
  d.subrange_count = subrange_count(v.size(), alpha);
  d.entries.resize(d.subrange_count * beta);
  const std::size_t blocks = (d.subrange_count + kBlockSubranges - 1) / kBlockSubranges;
  const unsigned lanes = parallel::effective_lanes(v.size(), resolve_lanes(opts.threads));
  parallel::for_each_chunk(blocks, lanes, [&](unsigned, std::size_t b, std::size_t e) {
    switch (beta) {
      case 1: return blocked_range<1>(v, alpha, b, e, d.subrange_count, d.entries.data());
      case 2: return blocked_range<2>(v, alpha, b, e, d.subrange_count, d.entries.data());
      case 3: return blocked_range<3>(v, alpha, b, e, d.subrange_count, d.entries.data());
      case 4: return blocked_range<4>(v, alpha, b, e, d.subrange_count, d.entries.data());
      default: {
        const std::size_t sb = b * kBlockSubranges;
        const std::size_t se = std::min(d.subrange_count, e * kBlockSubranges);
        return plain_dynamic(v, alpha, beta, sb, se, d.entries.data());
      }
    }
  });
  if (opts.counters) {
    opts.counters->add_read(v.size());
    opts.counters->add_written(d.entries.size());
  }
  return d;
}

DelegateVector build_delegates(std::span<const Value> v, unsigned alpha, unsigned beta,
                               const DelegateOptions& opts) {
  if (alpha <= kBlockedMaxAlpha) return extract_delegates_blocked(v, alpha, beta, opts);
  return extract_delegates(v, alpha, beta, opts);
}

}  // namespace dtk
