#include "dtk/distributed.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>

#include <unistd.h>

#include "dtk/data.hpp"
#include "dtk/kernels.hpp"
#include "dtk/pipeline.hpp"

namespace dtk {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t nanos_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count();
}

template <class T>
class MessageQueue {
public:
  void push(T msg) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(msg));
    }
    cv_.notify_one();
  }

  T pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !items_.empty(); });
    T msg = std::move(items_.front());
    items_.pop_front();
    return msg;
  }

private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
};

struct Envelope {
  GatherMessage message;
  Clock::time_point sent_at;
  WorkloadStats stats;
  std::string error;  ///< non-empty when the worker failed
};

void accumulate(WorkloadStats& into, const WorkloadStats& s) {
  into.delegate_vector_len += s.delegate_vector_len;
  into.concatenated_len += s.concatenated_len;
  into.fully_qualified_subranges += s.fully_qualified_subranges;
  into.partially_qualified_subranges += s.partially_qualified_subranges;
  into.subrange_count += s.subrange_count;
  into.first_topk_len += s.first_topk_len;
  into.candidate_pool_len += s.candidate_pool_len;
  into.elements_read += s.elements_read;
  into.elements_written += s.elements_written;
  for (std::size_t i = 0; i < kStageCount; ++i) into.per_stage_nanos[i] += s.per_stage_nanos[i];
  into.direct_fallback = into.direct_fallback || s.direct_fallback;
}

}  // namespace

std::size_t PartitionPlan::non_resident_count() const {
  return static_cast<std::size_t>(
      std::count_if(partitions.begin(), partitions.end(), [](const Partition& p) { return !p.resident; }));
}

PartitionPlan plan(std::size_t n, std::size_t k, std::size_t workers, std::size_t max_resident) {
  if (n == 0) throw Error(ErrorCode::EmptyInput, "cannot partition an empty vector");
  if (workers == 0) throw Error(ErrorCode::InvalidConfig, "need at least one worker");
  if (max_resident == 0) throw Error(ErrorCode::InvalidConfig, "max_resident must be positive");
  if (k == 0 || k > n) throw Error(ErrorCode::InvalidK, "k=" + std::to_string(k) + " with n=" + std::to_string(n));

  PartitionPlan p;
  p.n = n;
  p.workers = workers;
  p.assignments.resize(workers);
  const bool fits = workers >= (n + max_resident - 1) / max_resident;
  p.partition_len = fits ? (n + workers - 1) / workers : max_resident;
  if (k > p.partition_len)
    throw Error(ErrorCode::InvalidK, "k=" + std::to_string(k) + " exceeds partition length " +
                                         std::to_string(p.partition_len));

  for (std::size_t off = 0, idx = 0; off < n; off += p.partition_len, ++idx) {
    Partition part;
    part.index = idx;
    part.offset = off;
    part.length = std::min(p.partition_len, n - off);
    part.worker = idx % workers;
    part.resident = p.assignments[part.worker].empty();
    p.assignments[part.worker].push_back(idx);
    p.partitions.push_back(part);
  }
  return p;
}

DistributedResult run_distributed(const VectorSource& source, const PipelineConfig& cfg,
                                  const DistributedOptions& opts) {
  const auto wall_start = Clock::now();
  const bool in_memory = !source.memory.empty();
  if (!in_memory && !source.file) throw Error(ErrorCode::EmptyInput, "no input vector or file");
  const std::size_t n = in_memory ? source.memory.size() : read_vector_count(*source.file);
  (void)validate_config(cfg, n);

  DistributedResult out;
  out.plan = plan(n, cfg.k, opts.workers, opts.max_resident);
  const PartitionPlan& pl = out.plan;

  std::filesystem::path file;
  bool spilled = false;
  if (source.file) {
    file = *source.file;
  } else if (pl.non_resident_count() > 0) {
    file = opts.spill_path.empty()
               ? std::filesystem::temp_directory_path() / ("dtk_spill_" + std::to_string(::getpid()) + ".dtkv")
               : opts.spill_path;
    write_vector(file, source.memory);
    spilled = true;
  }

  MessageQueue<Envelope> queue;
  auto work = [&](std::size_t w) {
    Envelope env;
    env.message.worker_id = w;
    try {
      if (opts.on_worker_start) opts.on_worker_start(w);
      std::vector<Value> candidates;
      std::size_t owned = 0;
      for (const std::size_t idx : pl.assignments[w]) {
        const Partition& part = pl.partitions[idx];
        std::vector<Value> buffer;
        std::span<const Value> data;
        if (part.resident && in_memory) {
          data = source.memory.subspan(part.offset, part.length);
        } else {
          const auto t0 = Clock::now();
          buffer = read_vector_window(file, part.offset, part.length);
          if (!part.resident) env.message.reload_nanos += nanos_between(t0, Clock::now());
          data = buffer;
        }

        const auto t0 = Clock::now();
        owned += data.size();
        if (data.size() <= cfg.k) {
          candidates.insert(candidates.end(), data.begin(), data.end());
        } else {
          PipelineConfig local = cfg;
          local.threads = opts.threads_per_worker;
          const TopKResult r = delegate_topk(data, local);
          accumulate(env.stats, r.stats);
          candidates.insert(candidates.end(), r.values.begin(), r.values.end());
        }
        env.message.compute_nanos += nanos_between(t0, Clock::now());
      }

      const auto t0 = Clock::now();
      if (!candidates.empty()) {
        // Merge of this worker's partitions before the gather.
        env.message.local_topk = sort_and_choose(candidates, std::min(cfg.k, owned)).values;
      }
      env.message.compute_nanos += nanos_between(t0, Clock::now());
    } catch (const std::exception& e) {
      env.error = e.what();
    }
    env.sent_at = Clock::now();
    queue.push(std::move(env));
  };

  std::vector<std::jthread> threads;
  threads.reserve(pl.workers);
  for (std::size_t w = 0; w < pl.workers; ++w) threads.emplace_back(work, w);

  std::vector<Envelope> received;
  received.reserve(pl.workers);
  for (std::size_t i = 0; i < pl.workers; ++i) {
    Envelope env = queue.pop();
    env.message.communication_nanos = nanos_between(env.sent_at, Clock::now());
    received.push_back(std::move(env));
  }
  threads.clear();
  if (spilled) std::filesystem::remove(file);

  std::sort(received.begin(), received.end(),
            [](const Envelope& a, const Envelope& b) { return a.message.worker_id < b.message.worker_id; });
  for (const auto& env : received)
    if (!env.error.empty())
      throw Error(ErrorCode::WorkerFailed, "worker " + std::to_string(env.message.worker_id) + ": " + env.error);

  const auto t0 = Clock::now();
  std::vector<Value> gathered;
  WorkloadStats merged;
  for (auto& env : received) {
    gathered.insert(gathered.end(), env.message.local_topk.begin(), env.message.local_topk.end());
    accumulate(merged, env.stats);
    out.messages.push_back(std::move(env.message));
  }
  out.gathered_bytes = gathered.size() * sizeof(Value);
  TopKResult final_result = backend_topk(gathered, cfg.k, cfg.backend, cfg.threads);
  out.final_topk_nanos = nanos_between(t0, Clock::now());

  out.result.values = std::move(final_result.values);
  out.result.threshold = out.result.values.back();
  out.result.stats = merged;
  out.result.stats.elements_read += final_result.stats.elements_read;
  out.result.stats.elements_written += final_result.stats.elements_written;
  out.wall_nanos = nanos_between(wall_start, Clock::now());
  return out;
}

void write_dist_csv(std::ostream& out, const DistributedResult& r) {
  out << kDistCsvHeader << '\n';
  for (const auto& m : r.messages) {
    const auto& parts = r.plan.assignments[m.worker_id];
    const auto reloaded = std::count_if(parts.begin(), parts.end(),
                                        [&](std::size_t i) { return !r.plan.partitions[i].resident; });
    out << m.worker_id << ',' << parts.size() << ',' << reloaded << ',' << m.local_topk.size() << ','
        << m.compute_nanos << ',' << m.reload_nanos << ',' << m.communication_nanos << ','
        << (m.compute_nanos + m.reload_nanos + m.communication_nanos) << '\n';
  }
}

}  // namespace dtk
