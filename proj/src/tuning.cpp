#include "dtk/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include "dtk/kernels.hpp"
#include "dtk/pipeline.hpp"

namespace dtk {

CostBreakdown model_cost(double alpha, double k, double n, const CostModelParams& p) {
  const double sub = std::exp2(alpha);
  const double inv = 1.0 / sub;
  CostBreakdown c;
  c.t_delegate = (1.0 + inv) * n * p.c_global + 31.0 * n * inv * p.c_shfl;
  c.t_firstk = 5.0 * n * inv * p.c_global + 2.0 * k * p.c_global;
  c.t_concat = k * p.c_global + 2.0 * k * sub * p.c_global;
  c.t_secondk = 4.0 * k * sub * p.c_global;
  c.total = 31.0 * n * inv * p.c_shfl + (6.0 * n * inv + 6.0 * k * sub + 2.0 * k + n) * p.c_global;
  return c;
}

double model_second_difference(double alpha, double k, double n, const CostModelParams& p) {
  return model_cost(alpha - 1, k, n, p).total + model_cost(alpha + 1, k, n, p).total -
         2.0 * model_cost(alpha, k, n, p).total;
}

unsigned auto_alpha(std::size_t n, std::size_t k, double const_c, unsigned beta) {
  if (n == 0) throw Error(ErrorCode::EmptyInput, "auto_alpha needs n >= 1");
  if (k == 0 || k > n) throw Error(ErrorCode::InvalidK, "auto_alpha needs 1 <= k <= n");
  const double raw = 0.5 * (std::log2(static_cast<double>(n)) - std::log2(static_cast<double>(k)) + const_c);
  const unsigned max_alpha = floor_log2(n);
  unsigned alpha = raw <= 0 ? 0u : static_cast<unsigned>(std::min<double>(std::floor(raw), max_alpha));
  const std::size_t b = std::max(1u, beta);
  while (alpha > 0 && b * subrange_count(n, alpha) < k) --alpha;
  return alpha;
}

std::vector<SweepRow> sweep(std::span<const Value> v, const PipelineConfig& base, SweepParam param,
                            std::span<const unsigned> grid, const SweepOptions& opts) {
  const TopKResult oracle = sort_and_choose(v, base.k);
  const unsigned reps = std::max(1u, opts.repetitions);
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const unsigned g : grid) {
    PipelineConfig cfg = base;
    if (param == SweepParam::alpha) {
      cfg.auto_alpha = false;
      cfg.alpha = g;
    } else {
      cfg.beta = g;
    }
    cfg = validate_config(cfg, v.size());

    std::vector<TopKResult> runs;
    runs.reserve(reps);
    for (unsigned r = 0; r < reps; ++r) {
      TopKResult res = delegate_topk(v, cfg);
      if (res.values != oracle.values)
        throw Error(ErrorCode::InvalidConfig, "sweep point " + std::to_string(g) + " disagrees with oracle");
      runs.push_back(std::move(res));
    }
    std::sort(runs.begin(), runs.end(), [](const TopKResult& a, const TopKResult& b) {
      return a.stats.total_nanos() < b.stats.total_nanos();
    });
    const WorkloadStats& st = runs[runs.size() / 2].stats;

    SweepRow row;
    row.alpha = cfg.alpha;
    row.beta = cfg.beta;
    row.k = cfg.k;
    row.n = v.size();
    row.t_delegate_ns = st.stage_nanos(Stage::Delegate);
    row.t_firstk_ns = st.stage_nanos(Stage::FirstK);
    row.t_concat_ns = st.stage_nanos(Stage::Concat);
    row.t_secondk_ns = st.stage_nanos(Stage::SecondK);
    row.total_ns = st.total_nanos();
    row.delegate_len = st.delegate_vector_len;
    row.concat_len = st.concatenated_len;
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.alpha << ',' << r.beta << ',' << r.k << ',' << r.n << ',' << r.t_delegate_ns << ','
        << r.t_firstk_ns << ',' << r.t_concat_ns << ',' << r.t_secondk_ns << ',' << r.total_ns << ','
        << r.delegate_len << ',' << r.concat_len << '\n';
  }
}

}  // namespace dtk
