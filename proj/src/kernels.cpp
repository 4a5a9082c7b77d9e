#include "dtk/kernels.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <atomic>
#include <functional>
#include <limits>
#include <queue>
#include <string>

#include "dtk/parallel.hpp"

namespace dtk {

namespace {

constexpr unsigned kDigitBits = 8;
constexpr unsigned kDigitCount = 32 / kDigitBits;
constexpr std::size_t kRadixBins = std::size_t{1} << kDigitBits;

void check_k(std::size_t k, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::EmptyInput, "input vector is empty");
  if (k == 0 || k > n)
    throw Error(ErrorCode::InvalidK, "k=" + std::to_string(k) + " with n=" + std::to_string(n));
}

void add_read(Counters* c, std::uint64_t n) {
  if (c) c->add_read(n);
}
void add_written(Counters* c, std::uint64_t n) {
  if (c) c->add_written(n);
}

/// Final extraction pass shared by radix and bucket top-k.
///
/// Exact mode (take_all_equal == false): every element > threshold, then
/// threshold-equal elements in scan order until k are taken. Superset mode:
/// every element >= threshold. Lanes reserve output slots for their strictly
/// greater elements through an atomic cursor; threshold-equal elements are
/// placed afterwards in lane order so the chosen duplicates are deterministic.
template <class T>
std::vector<T> extract(std::span<const T> v, Value threshold, std::size_t k, bool take_all_equal,
                       unsigned lanes, Counters* counters) {
  const std::size_t n = v.size();
  std::vector<std::vector<T>> greater(lanes);
  std::vector<std::vector<T>> equal(lanes);
  // No lane ever needs more than k threshold-equal elements in exact mode.
  const std::size_t equal_cap = take_all_equal ? std::numeric_limits<std::size_t>::max() : k;
  parallel::for_each_chunk(n, lanes, [&](unsigned lane, std::size_t b, std::size_t e) {
    auto& gt = greater[lane];
    auto& eq = equal[lane];
    for (std::size_t i = b; i < e; ++i) {
      const Value x = value_of(v[i]);
      if (x > threshold) {
        gt.push_back(v[i]);
      } else if (x == threshold && eq.size() < equal_cap) {
        eq.push_back(v[i]);
      }
    }
  });
  add_read(counters, n);

  std::size_t total_greater = 0;
  std::size_t total_equal = 0;
  for (unsigned l = 0; l < lanes; ++l) {
    total_greater += greater[l].size();
    total_equal += equal[l].size();
  }
  std::size_t equal_quota = total_equal;
  if (!take_all_equal) equal_quota = k > total_greater ? std::min(total_equal, k - total_greater) : 0;

  std::vector<T> out(total_greater + equal_quota);
  std::atomic<std::size_t> cursor{0};
  const unsigned copy_lanes = total_greater >= parallel::kMinParallelGrain ? lanes : 1;
  parallel::for_each_chunk(lanes, copy_lanes, [&](unsigned, std::size_t b, std::size_t e) {
    for (std::size_t l = b; l < e; ++l) {
      const std::size_t at = cursor.fetch_add(greater[l].size(), std::memory_order_relaxed);
      std::copy(greater[l].begin(), greater[l].end(), out.begin() + static_cast<std::ptrdiff_t>(at));
    }
  });
  std::size_t at = total_greater;
  for (unsigned l = 0; l < lanes && at < out.size(); ++l) {
    const std::size_t take = std::min(equal[l].size(), out.size() - at);
    std::copy_n(equal[l].begin(), take, out.begin() + static_cast<std::ptrdiff_t>(at));
    at += take;
  }
  add_written(counters, out.size());
  return out;
}

template <class T>
Value min_value(const std::vector<T>& xs) {
  Value m = std::numeric_limits<Value>::max();
  for (const auto& x : xs) m = std::min(m, value_of(x));
  return m;
}

template <class T>
Selection<T> finish(std::span<const T> v, std::size_t k, Value bound, bool exact_bound,
                    const KernelOptions& opts, unsigned lanes) {
  Selection<T> out;
  out.bucket_lower_bound = bound;
  const bool superset = opts.skip_last || opts.keep_ties || !exact_bound;
  out.selected = extract(v, bound, k, superset, lanes, opts.counters);
  out.threshold = exact_bound ? bound : min_value(out.selected);
  return out;
}

}  // namespace

template <class T>
Selection<T> radix_topk(std::span<const T> v, std::size_t k, const KernelOptions& opts) {
  check_k(k, v.size());
  const std::size_t n = v.size();
  const unsigned lanes = parallel::effective_lanes(n, resolve_lanes(opts.threads));

  RadixState st{0, 0, 0, k};
  const unsigned passes = opts.skip_last ? kDigitCount - 1 : kDigitCount;
  std::vector<std::array<std::size_t, kRadixBins>> local(lanes);

  for (unsigned pass = 0; pass < passes; ++pass) {
    st.pass_index = pass;
    if (opts.radix_trace) opts.radix_trace->push_back(st);
    const unsigned shift = 32 - kDigitBits * (pass + 1);
    const Value mask = st.prefix_mask;
    const Value bits = st.prefix_bits;
    parallel::for_each_chunk(n, lanes, [&](unsigned lane, std::size_t b, std::size_t e) {
      auto& h = local[lane];
      h.fill(0);
      for (std::size_t i = b; i < e; ++i) {
        const Value x = value_of(v[i]);
        if ((x & mask) == bits) ++h[(x >> shift) & (kRadixBins - 1)];
      }
    });
    add_read(opts.counters, n);

    std::array<std::size_t, kRadixBins> hist{};
    for (const auto& h : local)
      for (std::size_t d = 0; d < kRadixBins; ++d) hist[d] += h[d];

    std::size_t above = 0;
    std::size_t digit = kRadixBins - 1;
    for (;; --digit) {
      if (above + hist[digit] >= st.remaining_k || digit == 0) break;
      above += hist[digit];
    }
    st.remaining_k -= above;
    st.prefix_bits |= static_cast<Value>(digit) << shift;
    st.prefix_mask |= static_cast<Value>(kRadixBins - 1) << shift;
  }

  auto out = finish(v, k, st.prefix_bits, !opts.skip_last, opts, lanes);
  out.iterations = passes;
  return out;
}

template <class T>
Selection<T> bucket_topk(std::span<const T> v, std::size_t k, const KernelOptions& opts) {
  check_k(k, v.size());
  if (opts.num_buckets < 2) throw Error(ErrorCode::InvalidConfig, "bucket top-k needs >= 2 buckets");
  const std::size_t n = v.size();
  const std::size_t buckets = opts.num_buckets;
  const unsigned lanes = parallel::effective_lanes(n, resolve_lanes(opts.threads));

  struct Bin {
    std::size_t count = 0;
    Value lo = std::numeric_limits<Value>::max();
    Value hi = 0;
  };

  std::vector<Value> lane_min(lanes, std::numeric_limits<Value>::max());
  std::vector<Value> lane_max(lanes, 0);
  parallel::for_each_chunk(n, lanes, [&](unsigned lane, std::size_t b, std::size_t e) {
    Value lo = lane_min[lane], hi = lane_max[lane];
    for (std::size_t i = b; i < e; ++i) {
      const Value x = value_of(v[i]);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    lane_min[lane] = lo;
    lane_max[lane] = hi;
  });
  add_read(opts.counters, n);

  Value lo = *std::min_element(lane_min.begin(), lane_min.end());
  Value hi = *std::max_element(lane_max.begin(), lane_max.end());
  std::size_t remaining = k;
  unsigned iterations = 1;  // the min/max scan
  std::vector<std::vector<Bin>> local(lanes, std::vector<Bin>(buckets));

  // First value of bucket j when [lo, hi] is split into equal real-valued widths.
  auto bucket_start = [&](std::uint64_t range, std::size_t j) -> Value {
    return static_cast<Value>(lo + (j * range + buckets - 1) / buckets);
  };

  Value bound = lo;
  bool exact = false;
  for (;;) {
    if (lo == hi) {
      bound = lo;
      exact = true;
      break;
    }
    const std::uint64_t range = std::uint64_t{hi} - lo;
    if (opts.skip_last && range < buckets) {
      // The next split would isolate single values, i.e. the final iteration.
      bound = lo;
      break;
    }
    parallel::for_each_chunk(n, lanes, [&](unsigned lane, std::size_t b, std::size_t e) {
      auto& bins = local[lane];
      std::fill(bins.begin(), bins.end(), Bin{});
      for (std::size_t i = b; i < e; ++i) {
        const Value x = value_of(v[i]);
        if (x < lo || x > hi) continue;
        const std::size_t j =
            std::min<std::uint64_t>(buckets - 1, (std::uint64_t{x} - lo) * buckets / range);
        auto& bin = bins[j];
        ++bin.count;
        bin.lo = std::min(bin.lo, x);
        bin.hi = std::max(bin.hi, x);
      }
    });
    add_read(opts.counters, n);
    ++iterations;

    std::vector<Bin> bins(buckets);
    for (const auto& lb : local)
      for (std::size_t j = 0; j < buckets; ++j) {
        bins[j].count += lb[j].count;
        bins[j].lo = std::min(bins[j].lo, lb[j].lo);
        bins[j].hi = std::max(bins[j].hi, lb[j].hi);
      }

    std::size_t above = 0;
    std::size_t target = buckets - 1;
    for (;; --target) {
      if (above + bins[target].count >= remaining || target == 0) break;
      above += bins[target].count;
    }
    remaining -= above;
    const Bin& t = bins[target];
    const Value next_lo = bucket_start(range, target);
    const Value next_hi = target + 1 == buckets ? hi : static_cast<Value>(bucket_start(range, target + 1) - 1);
    if (opts.bucket_trace)
      opts.bucket_trace->push_back({lo, hi, target, t.count, next_lo, next_hi});

    if (t.lo == t.hi || remaining == t.count) {
      bound = t.lo;
      exact = true;
      break;
    }
    if (remaining == 1) {
      bound = t.hi;
      exact = true;
      break;
    }
    lo = next_lo;
    hi = next_hi;
  }

  auto out = finish(v, k, bound, exact, opts, lanes);
  out.iterations = iterations;
  return out;
}

template Selection<Value> radix_topk<Value>(std::span<const Value>, std::size_t, const KernelOptions&);
template Selection<KeyedEntry> radix_topk<KeyedEntry>(std::span<const KeyedEntry>, std::size_t,
                                                      const KernelOptions&);
template Selection<Value> bucket_topk<Value>(std::span<const Value>, std::size_t, const KernelOptions&);
template Selection<KeyedEntry> bucket_topk<KeyedEntry>(std::span<const KeyedEntry>, std::size_t,
                                                       const KernelOptions&);

namespace {

void compare_exchange(Value& a, Value& b, bool ascending) {
  if (ascending ? a > b : a < b) std::swap(a, b);
}

/// Full bitonic sort of one block (size a power of two).
void bitonic_sort_block(std::span<Value> a, bool ascending) {
  const std::size_t n = a.size();
  for (std::size_t size = 2; size <= n; size <<= 1)
    for (std::size_t stride = size >> 1; stride > 0; stride >>= 1)
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i ^ stride;
        if (j > i) compare_exchange(a[i], a[j], ((i & size) == 0) == ascending);
      }
}

/// Sorts a bitonic block.
void bitonic_merge_block(std::span<Value> a, bool ascending) {
  const std::size_t n = a.size();
  for (std::size_t stride = n >> 1; stride > 0; stride >>= 1)
    for (std::size_t i = 0; i < n; ++i)
      if ((i & stride) == 0) compare_exchange(a[i], a[i + stride], ascending);
}

}  // namespace

std::vector<Value> bitonic_topk(std::span<const Value> v, std::size_t k, const BitonicOptions& opts) {
  check_k(k, v.size());
  if (!is_power_of_two(k))
    throw Error(ErrorCode::InvalidK, "bitonic top-k needs a power-of-two k, got " + std::to_string(k));
  BitonicTrace* trace = opts.trace;
  if (v.size() == k) {
    if (trace) trace->live_lengths.push_back(k);
    add_read(opts.counters, k);
    add_written(opts.counters, k);
    return {v.begin(), v.end()};
  }

  std::size_t len = std::bit_ceil(v.size());
  std::vector<Value> cur(len, 0);
  std::copy(v.begin(), v.end(), cur.begin());
  const unsigned lanes = parallel::effective_lanes(len, resolve_lanes(opts.threads));
  if (trace) trace->live_lengths.push_back(len);

  // Blocks of k alternate ascending / descending so neighbours form bitonic pairs.
  std::size_t blocks = len / k;
  parallel::for_each_chunk(blocks, lanes, [&](unsigned, std::size_t b, std::size_t e) {
    for (std::size_t blk = b; blk < e; ++blk)
      bitonic_sort_block(std::span<Value>(cur).subspan(blk * k, k), blk % 2 == 0);
  });
  add_read(opts.counters, len);

  std::vector<Value> next(len / 2);
  while (len > k) {
    const std::size_t pairs = len / (2 * k);
    const std::size_t pair_lanes = parallel::effective_lanes(len, lanes);
    parallel::for_each_chunk(pairs, pair_lanes, [&](unsigned, std::size_t b, std::size_t e) {
      for (std::size_t p = b; p < e; ++p) {
        const Value* lhs = cur.data() + 2 * p * k;
        const Value* rhs = lhs + k;
        Value* dst = next.data() + p * k;
        // Half-cleaner: the element-wise max of an ascending and a descending
        // run is a bitonic sequence holding the top k of the pair.
        for (std::size_t i = 0; i < k; ++i) dst[i] = std::max(lhs[i], rhs[i]);
        bitonic_merge_block(std::span<Value>(dst, k), p % 2 == 0);
      }
    });
    add_read(opts.counters, len);
    len /= 2;
    std::swap(cur, next);
    cur.resize(len);
    next.resize(len / 2);
    if (trace) {
      trace->live_lengths.push_back(len);
      if (trace->keep_snapshots) trace->snapshots.push_back(cur);
    }
  }
  std::reverse(cur.begin(), cur.end());
  add_written(opts.counters, k);
  return cur;
}

TopKResult sort_and_choose(std::span<const Value> v, std::size_t k) {
  check_k(k, v.size());
  std::vector<Value> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  sorted.resize(k);
  TopKResult r;
  r.threshold = sorted.back();
  r.values = std::move(sorted);
  r.stats.elements_read = v.size();
  r.stats.elements_written = k;
  return r;
}

TopKResult heap_topk(std::span<const Value> v, std::size_t k) {
  check_k(k, v.size());
  std::priority_queue<Value, std::vector<Value>, std::greater<>> heap;
  for (const Value x : v) {
    if (heap.size() < k) {
      heap.push(x);
    } else if (x > heap.top()) {
      heap.pop();
      heap.push(x);
    }
  }
  TopKResult r;
  r.values.resize(k);
  for (std::size_t i = k; i-- > 0;) {
    r.values[i] = heap.top();
    heap.pop();
  }
  r.threshold = r.values.back();
  r.stats.elements_read = v.size();
  r.stats.elements_written = k;
  return r;
}

TopKResult backend_topk(std::span<const Value> v, std::size_t k, Backend backend, unsigned threads,
                        Counters* counters) {
  Counters local;
  TopKResult r;
  switch (backend) {
    case Backend::radix:
      r.values = radix_topk(v, k, KernelOptions{.threads = threads, .counters = &local}).selected;
      break;
    case Backend::bucket:
      r.values = bucket_topk(v, k, KernelOptions{.threads = threads, .counters = &local}).selected;
      break;
    case Backend::bitonic:
      r.values = bitonic_topk(v, k, BitonicOptions{.threads = threads, .counters = &local});
      break;
  }
  std::sort(r.values.begin(), r.values.end(), std::greater<>());
  r.threshold = r.values.back();
  r.stats.elements_read = local.elements_read.load();
  r.stats.elements_written = local.elements_written.load();
  if (counters) {
    counters->add_read(r.stats.elements_read);
    counters->add_written(r.stats.elements_written);
  }
  return r;
}

}  // namespace dtk
