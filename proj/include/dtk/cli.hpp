#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dtk/core.hpp"

namespace dtk::cli {

/// Accepts "12345" or "2^e".
std::size_t parse_count(std::string_view text);

struct RunReport {
  PipelineConfig config;  ///< normalized
  std::size_t n = 0;
  Value threshold = 0;
  bool verified = false;
  bool verify_requested = false;
  WorkloadStats stats;
  double delegate_ratio = 0;
  double concat_ratio = 0;
  double sum_ratio = 0;
};

RunReport make_report(const PipelineConfig& cfg, std::size_t n, const TopKResult& r);

inline constexpr const char* kRunCsvHeader =
    "backend,n,k,alpha,beta,skip_last,threshold,verified,delegate_len,concat_len,fully_qualified,"
    "partially_qualified,elements_read,elements_written,t_delegate_ns,t_firstk_ns,t_concat_ns,"
    "t_secondk_ns,total_ns,delegate_ratio,concat_ratio,sum_ratio";

void write_run_csv(std::ostream& out, const RunReport& r);
void print_report(std::ostream& out, const RunReport& r);

/// Exit codes: 0 success, 1 --verify mismatch, 2 usage or runtime error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitError = 2;

/// Entry point of the `dtk` tool; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dtk::cli
