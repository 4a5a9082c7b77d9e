#include "dtk/core.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "dtk/tuning.hpp"

namespace dtk {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidBeta: return "InvalidBeta";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InfeasibleN: return "InfeasibleN";
    case ErrorCode::WorkerFailed: return "WorkerFailed";
  }
  return "Unknown";
}

std::string_view to_string(Backend b) noexcept {
  switch (b) {
    case Backend::radix: return "radix";
    case Backend::bucket: return "bucket";
    case Backend::bitonic: return "bitonic";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "radix") return Backend::radix;
  if (name == "bucket") return Backend::bucket;
  if (name == "bitonic") return Backend::bitonic;
  throw Error(ErrorCode::InvalidConfig, "unknown backend '" + std::string(name) + "'");
}

std::int64_t WorkloadStats::total_nanos() const {
  return std::accumulate(per_stage_nanos.begin(), per_stage_nanos.end(), std::int64_t{0});
}

std::size_t subrange_count(std::size_t n, unsigned alpha) noexcept {
  const std::size_t len = std::size_t{1} << alpha;
  return (n + len - 1) / len;
}

unsigned floor_log2(std::size_t n) noexcept {
  return static_cast<unsigned>(std::bit_width(n) - 1);
}

PipelineConfig validate_config(PipelineConfig cfg, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::EmptyInput, "input vector is empty");
  if (cfg.k == 0 || cfg.k > n)
    throw Error(ErrorCode::InvalidK, "k=" + std::to_string(cfg.k) + " with n=" + std::to_string(n));
  if (cfg.backend == Backend::bitonic && !is_power_of_two(cfg.k))
    throw Error(ErrorCode::InvalidK, "bitonic backend needs a power-of-two k, got " + std::to_string(cfg.k));
  if (!(cfg.const_c > 0) && cfg.auto_alpha)
    throw Error(ErrorCode::InvalidConfig, "const_c must be positive");

  cfg.beta = std::max(1u, cfg.beta);
  if (cfg.auto_alpha) {
    // The normalized config pins the tuned value so re-validation is a no-op.
    cfg.alpha = auto_alpha(n, cfg.k, cfg.const_c, cfg.beta);
    cfg.auto_alpha = false;
  }
  cfg.alpha = std::min(cfg.alpha, floor_log2(n));

  const std::size_t sub = std::size_t{1} << cfg.alpha;
  if (sub > 1) cfg.beta = static_cast<unsigned>(std::min<std::size_t>(cfg.beta, sub - 1));
  cfg.direct_fallback = sub <= cfg.beta || cfg.beta * subrange_count(n, cfg.alpha) < cfg.k;
  return cfg;
}

unsigned default_lanes() noexcept {
  unsigned lanes = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DTK_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) lanes = std::min<unsigned>(lanes, static_cast<unsigned>(cap));
  }
  return lanes;
}

}  // namespace dtk
