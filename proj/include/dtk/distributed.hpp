#pragma once

/** \file distributed.hpp
 *  \brief Partitioned multi-worker top-k with a gather to a coordinator.
 *
 *  V is split into disjoint equal-length partitions. Each worker lane runs the
 *  delegate pipeline over its own partitions, merges them into one local top-k
 *  and sends a single GatherMessage. The coordinator waits for all workers and
 *  computes the exact global top-k from the gathered candidates. Workers share
 *  no mutable state; the message queue is the only channel.
 *
 *  A worker keeps its first partition resident. Further partitions are
 *  streamed from a DTKV file every time they are processed and that read time
 *  is reported as reload overhead.
 */

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dtk/core.hpp"

namespace dtk {

struct Partition {
  std::size_t index = 0;
  std::size_t offset = 0;
  std::size_t length = 0;
  std::size_t worker = 0;
  bool resident = true;
};

struct PartitionPlan {
  std::size_t n = 0;
  std::size_t workers = 0;
  std::size_t partition_len = 0;
  std::vector<Partition> partitions;
  /// worker id -> partition indices, in processing order
  std::vector<std::vector<std::size_t>> assignments;

  std::size_t non_resident_count() const;
};

/// Default residency cap per worker.
inline constexpr std::size_t kDefaultMaxResident = std::size_t{1} << 26;

/// workers * max_resident >= n: one partition of ceil(n / workers) per worker.
/// Otherwise partitions of max_resident elements are dealt round-robin.
/// Throws InvalidK when k exceeds the partition length.
PartitionPlan plan(std::size_t n, std::size_t k, std::size_t workers,
                   std::size_t max_resident = kDefaultMaxResident);

struct GatherMessage {
  std::size_t worker_id = 0;
  std::vector<Value> local_topk;  ///< non-increasing, min(k, owned) values
  std::int64_t compute_nanos = 0;
  std::int64_t reload_nanos = 0;
  /// Send-to-receive latency measured by the coordinator.
  std::int64_t communication_nanos = 0;
};

/// Input for run_distributed: an in-memory vector, a DTKV file, or both.
/// Non-resident partitions always stream from the file; an in-memory-only
/// source is spilled to spill_path first (untimed).
struct VectorSource {
  std::span<const Value> memory;
  std::optional<std::filesystem::path> file;
};

struct DistributedOptions {
  std::size_t workers = 1;
  std::size_t max_resident = kDefaultMaxResident;
  /// Parallel lanes inside each worker's local pipeline (one device each).
  unsigned threads_per_worker = 1;
  std::filesystem::path spill_path;  ///< default: temp directory
  /// Test hook, called on each worker thread before it starts.
  std::function<void(std::size_t worker)> on_worker_start;
};

struct DistributedResult {
  TopKResult result;
  std::vector<GatherMessage> messages;  ///< ordered by worker id
  PartitionPlan plan;
  std::size_t gathered_bytes = 0;
  std::int64_t final_topk_nanos = 0;
  std::int64_t wall_nanos = 0;
};

DistributedResult run_distributed(const VectorSource& source, const PipelineConfig& cfg,
                                  const DistributedOptions& opts);

inline constexpr const char* kDistCsvHeader =
    "worker_id,partitions,reloaded_partitions,candidates,compute_ns,reload_ns,communication_ns,total_ns";

void write_dist_csv(std::ostream& out, const DistributedResult& r);

}  // namespace dtk
