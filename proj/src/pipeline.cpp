#include "dtk/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <string>

#include "dtk/parallel.hpp"

namespace dtk {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t nanos_since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

}  // namespace

QualificationReport first_topk(const DelegateVector& d, std::size_t k, Backend backend,
                               bool skip_last, const StageOptions& opts) {
  const std::span<const KeyedEntry> entries(d.entries);
  if (k == 0 || k > entries.size())
    throw Error(ErrorCode::InvalidK, "first top-k needs 1 <= k <= |D|=" + std::to_string(entries.size()));

  QualificationReport r;
  KernelOptions ko;
  ko.skip_last = skip_last;
  ko.keep_ties = true;
  ko.threads = opts.threads;
  ko.counters = opts.counters;
  switch (backend) {
    case Backend::radix: {
      auto sel = radix_topk(entries, k, ko);
      r.selected_delegates = std::move(sel.selected);
      r.theta = sel.threshold;
      break;
    }
    case Backend::bucket: {
      auto sel = bucket_topk(entries, k, ko);
      r.selected_delegates = std::move(sel.selected);
      r.theta = sel.threshold;
      break;
    }
    case Backend::bitonic: {
      // Bitonic top-k carries no payload; recover the tagged entries by threshold.
      std::vector<Value> values(entries.size());
      std::transform(entries.begin(), entries.end(), values.begin(),
                     [](const KeyedEntry& e) { return e.value; });
      const auto top = bitonic_topk(values, k, BitonicOptions{opts.threads, opts.counters, nullptr});
      r.theta = *std::min_element(top.begin(), top.end());
      for (const auto& e : entries)
        if (e.value >= r.theta) r.selected_delegates.push_back(e);
      if (opts.counters) {
        opts.counters->add_read(entries.size());
        opts.counters->add_written(r.selected_delegates.size());
      }
      break;
    }
  }

  std::vector<KeyedEntry> by_tag = r.selected_delegates;
  std::sort(by_tag.begin(), by_tag.end(),
            [](const KeyedEntry& a, const KeyedEntry& b) { return a.tag < b.tag; });
  for (std::size_t i = 0; i < by_tag.size();) {
    std::size_t j = i;
    while (j < by_tag.size() && by_tag[j].tag == by_tag[i].tag) ++j;
    if (j - i == d.beta) {
      r.fully_qualified.push_back(by_tag[i].tag);
    } else {
      r.partial_entries.insert(r.partial_entries.end(), by_tag.begin() + static_cast<std::ptrdiff_t>(i),
                               by_tag.begin() + static_cast<std::ptrdiff_t>(j));
      ++r.partially_qualified_subranges;
    }
    i = j;
  }
  return r;
}

std::vector<Value> concatenate_filtered(std::span<const Value> v, const QualificationReport& report,
                                        unsigned alpha, const StageOptions& opts) {
  const auto& ids = report.fully_qualified;
  if (ids.empty()) return {};
  const std::size_t len = std::size_t{1} << alpha;
  const Value theta = report.theta;
  const unsigned lanes = parallel::effective_lanes(ids.size() * len, resolve_lanes(opts.threads));

  std::vector<std::vector<Value>> local(lanes);
  std::vector<std::uint64_t> reads(lanes, 0);
  parallel::for_each_chunk(ids.size(), lanes, [&](unsigned lane, std::size_t b, std::size_t e) {
    auto& out = local[lane];
    for (std::size_t i = b; i < e; ++i) {
      const std::size_t lo = std::size_t{ids[i]} * len;
      const std::size_t hi = std::min(v.size(), lo + len);
      for (std::size_t j = lo; j < hi; ++j)
        if (v[j] >= theta) out.push_back(v[j]);
      reads[lane] += hi - lo;
    }
  });

  std::size_t total = 0;
  for (const auto& l : local) total += l.size();
  std::vector<Value> out(total);
  std::atomic<std::size_t> cursor{0};
  parallel::for_each_chunk(lanes, total >= parallel::kMinParallelGrain ? lanes : 1,
                           [&](unsigned, std::size_t b, std::size_t e) {
                             for (std::size_t l = b; l < e; ++l) {
                               const std::size_t at = cursor.fetch_add(local[l].size());
                               std::copy(local[l].begin(), local[l].end(),
                                         out.begin() + static_cast<std::ptrdiff_t>(at));
                             }
                           });
  if (opts.counters) {
    std::uint64_t r = 0;
    for (auto x : reads) r += x;
    opts.counters->add_read(r);
    opts.counters->add_written(total);
  }
  return out;
}

std::vector<Value> candidate_pool(std::vector<Value> concatenated, const QualificationReport& report) {
  concatenated.reserve(concatenated.size() + report.partial_entries.size());
  for (const auto& e : report.partial_entries) concatenated.push_back(e.value);
  return concatenated;
}

TopKResult delegate_topk(std::span<const Value> v, const PipelineConfig& raw) {
  const PipelineConfig cfg = validate_config(raw, v.size());
  Counters counters;
  TopKResult result;
  WorkloadStats& st = result.stats;
  auto stage = [&](Stage s) -> std::int64_t& { return st.per_stage_nanos[static_cast<std::size_t>(s)]; };

  if (cfg.direct_fallback) {
    const auto t0 = Clock::now();
    result = backend_topk(v, cfg.k, cfg.backend, cfg.threads, &counters);
    stage(Stage::SecondK) = nanos_since(t0);
    st.direct_fallback = true;
    st.candidate_pool_len = v.size();
    st.elements_read = counters.elements_read.load();
    st.elements_written = counters.elements_written.load();
    return result;
  }

  const StageOptions so{cfg.threads, &counters};

  auto t0 = Clock::now();
  const DelegateVector d = build_delegates(v, cfg.alpha, cfg.beta, DelegateOptions{cfg.threads, &counters});
  stage(Stage::Delegate) = nanos_since(t0);

  t0 = Clock::now();
  const QualificationReport report = first_topk(d, cfg.k, cfg.backend, cfg.skip_last_iteration, so);
  stage(Stage::FirstK) = nanos_since(t0);

  t0 = Clock::now();
  std::vector<Value> concatenated = concatenate_filtered(v, report, cfg.alpha, so);
  stage(Stage::Concat) = nanos_since(t0);

  st.delegate_vector_len = d.entries.size();
  st.subrange_count = d.subrange_count;
  st.first_topk_len = report.selected_delegates.size();
  st.concatenated_len = concatenated.size();
  st.fully_qualified_subranges = report.fully_qualified.size();
  st.partially_qualified_subranges = report.partially_qualified_subranges;

  t0 = Clock::now();
  std::vector<Value> pool = candidate_pool(std::move(concatenated), report);
  st.candidate_pool_len = pool.size();
  if (pool.size() == cfg.k) {
    std::sort(pool.begin(), pool.end(), std::greater<>());
    result.values = std::move(pool);
    st.second_topk_skipped = true;
  } else {
    result.values = backend_topk(pool, cfg.k, cfg.backend, cfg.threads, &counters).values;
  }
  stage(Stage::SecondK) = nanos_since(t0);

  result.threshold = result.values.back();
  st.elements_read = counters.elements_read.load();
  st.elements_written = counters.elements_written.load();
  return result;
}

}  // namespace dtk
