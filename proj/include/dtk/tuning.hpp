#pragma once

/** \file tuning.hpp
 *  \brief Analytic cost model of the four pipeline stages, the closed-form
 *         subrange-size tuner, and measured alpha / beta sweeps.
 *
 *  The model counts memory accesses (c_global) and intra-subrange reduction
 *  steps (c_shfl). The 31-step reduction term comes from a 32-lane tree
 *  reduction; the CPU kernels have no such step, but the fitted constant of
 *  the tuner was derived with it, so the model keeps it.
 */

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dtk/core.hpp"

namespace dtk {

struct CostModelParams {
  double c_global = 1.0;
  double c_shfl = 1.0;
  double const_c = 3.0;
};

struct CostBreakdown {
  double t_delegate = 0;
  double t_firstk = 0;
  double t_concat = 0;
  double t_secondk = 0;
  /// Closed-form total. Its k term is 2k, while the per-stage terms sum to 3k;
  /// the difference does not depend on alpha.
  double total = 0;
};

/// alpha may be any real >= 0; integer grids are the common use.
CostBreakdown model_cost(double alpha, double k, double n, const CostModelParams& p = {});

/// Second finite difference of the model total at alpha.
double model_second_difference(double alpha, double k, double n, const CostModelParams& p = {});

/// floor((log2 n - log2 k + const_c) / 2), clamped to [0, floor(log2 n)], then
/// lowered until beta * ceil(n / 2^alpha) >= k or alpha == 0.
unsigned auto_alpha(std::size_t n, std::size_t k, double const_c = 3.0, unsigned beta = 2);

enum class SweepParam { alpha, beta };

struct SweepRow {
  unsigned alpha = 0;
  unsigned beta = 0;
  std::size_t k = 0;
  std::size_t n = 0;
  std::int64_t t_delegate_ns = 0;
  std::int64_t t_firstk_ns = 0;
  std::int64_t t_concat_ns = 0;
  std::int64_t t_secondk_ns = 0;
  std::int64_t total_ns = 0;
  std::size_t delegate_len = 0;
  std::size_t concat_len = 0;
};

struct SweepOptions {
  /// Timed runs per grid point; the row reports the run with the median total.
  unsigned repetitions = 1;
};

/// Runs the pipeline once per grid value of `param` (other fields taken from
/// base, with auto_alpha disabled for alpha sweeps). Each result is checked
/// against sort_and_choose before its timing is kept; a mismatch throws.
std::vector<SweepRow> sweep(std::span<const Value> v, const PipelineConfig& base, SweepParam param,
                            std::span<const unsigned> grid, const SweepOptions& opts = {});

inline constexpr const char* kSweepCsvHeader =
    "alpha,beta,k,n,t_delegate_ns,t_firstk_ns,t_concat_ns,t_secondk_ns,total_ns,delegate_len,concat_len";

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace dtk
