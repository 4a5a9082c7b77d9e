#include <doctest.h>

#include "dtk/data.hpp"
#include "dtk/distributed.hpp"
#include "dtk/pipeline.hpp"
#include "support.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

using namespace dtk;
using namespace dtk::test;

namespace {

PipelineConfig config(std::size_t k, Backend b = Backend::radix) {
  PipelineConfig c;
  c.k = k;
  c.backend = b;
  return c;
}

}  // namespace

TEST_SUITE("distributed") {

TEST_CASE("one partition per worker when everything fits") {
  const auto p = plan(std::size_t{1} << 26, 128, 4, std::size_t{1} << 26);
  CHECK(p.partition_len == std::size_t{1} << 24);
  REQUIRE(p.partitions.size() == 4);
  CHECK(p.non_resident_count() == 0);
  for (std::size_t w = 0; w < 4; ++w) CHECK(p.assignments[w] == std::vector<std::size_t>{w});
}

TEST_CASE("round-robin partitions above the residency cap") {
  const auto p = plan(std::size_t{1} << 28, 128, 2, std::size_t{1} << 26);
  CHECK(p.partition_len == std::size_t{1} << 26);
  REQUIRE(p.partitions.size() == 4);
  CHECK(p.non_resident_count() == 2);
  CHECK(p.assignments[0] == std::vector<std::size_t>{0, 2});
  CHECK(p.assignments[1] == std::vector<std::size_t>{1, 3});
  CHECK(p.partitions[0].resident);
  CHECK_FALSE(p.partitions[2].resident);
}

TEST_CASE("partitions are disjoint and cover the input") {
  for (std::size_t n : {1ul, 10ul, 1000ul, 12345ul}) {
    for (std::size_t w : {1ul, 2ul, 3ul, 7ul}) {
      for (std::size_t cap : {1ul, 100ul, 5000ul, 1ul << 20}) {
        const auto p = plan(n, 1, w, cap);
        std::size_t at = 0;
        std::set<std::size_t> owned;
        for (const auto& part : p.partitions) {
          CHECK(part.offset == at);
          CHECK(part.length >= 1);
          CHECK(part.length <= p.partition_len);
          CHECK(part.worker < w);
          at += part.length;
          CHECK(owned.insert(part.index).second);
        }
        CHECK(at == n);
        for (std::size_t i = 0; i + 1 < p.partitions.size(); ++i)
          CHECK(p.partitions[i].length == p.partition_len);
      }
    }
  }
}

TEST_CASE("k larger than a partition is rejected") {
  try {
    plan(1000, 300, 4, 1000);
    FAIL("expected InvalidK");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidK);
  }
  CHECK_NOTHROW(plan(1000, 250, 4, 1000));
}

TEST_CASE("one worker matches the single-machine pipeline") {
  const auto v = gen_uniform(std::size_t{1} << 20, 2);
  DistributedOptions o;
  o.workers = 1;
  const auto r = run_distributed(VectorSource{v, std::nullopt}, config(128), o);
  CHECK(r.result.values == delegate_topk(v, config(128)).values);
  REQUIRE(r.messages.size() == 1);
  CHECK(r.messages[0].local_topk.size() == 128);
  CHECK(r.gathered_bytes == 128 * 4);
}

TEST_CASE("worker count does not change the result") {
  const auto v = gen_uniform(std::size_t{1} << 20, 5);
  const auto want = top_values(v, 256);
  for (std::size_t w : {1ul, 2ul, 4ul, 8ul}) {
    for (Backend b : {Backend::radix, Backend::bucket, Backend::bitonic}) {
      DistributedOptions o;
      o.workers = w;
      const auto r = run_distributed(VectorSource{v, std::nullopt}, config(256, b), o);
      CHECK(r.result.values == want);
      CHECK(r.result.threshold == want.back());
      CHECK(r.gathered_bytes == w * 256 * 4);
      REQUIRE(r.messages.size() == w);
      for (std::size_t i = 0; i < w; ++i) CHECK(r.messages[i].worker_id == i);
    }
  }
}

TEST_CASE("non-resident partitions stream from the file") {
  TempDir dir;
  const auto v = gen_uniform(200000, 3);
  write_vector(dir / "v.dtkv", v);
  DistributedOptions o;
  o.workers = 2;
  o.max_resident = 30000;
  const auto r = run_distributed(VectorSource{{}, dir / "v.dtkv"}, config(64), o);
  CHECK(r.result.values == top_values(v, 64));
  CHECK(r.plan.non_resident_count() > 0);
  for (const auto& m : r.messages) CHECK(m.reload_nanos > 0);

  o.max_resident = 200000;
  const auto fits = run_distributed(VectorSource{{}, dir / "v.dtkv"}, config(64), o);
  CHECK(fits.plan.non_resident_count() == 0);
  for (const auto& m : fits.messages) CHECK(m.reload_nanos == 0);
}

TEST_CASE("in-memory input spills for non-resident partitions") {
  TempDir dir;
  const auto v = gen_uniform(100000, 4);
  DistributedOptions o;
  o.workers = 1;
  o.max_resident = 10000;
  o.spill_path = dir / "spill.dtkv";
  const auto r = run_distributed(VectorSource{v, std::nullopt}, config(100), o);
  CHECK(r.result.values == top_values(v, 100));
  CHECK(r.messages[0].reload_nanos > 0);
  CHECK_FALSE(std::filesystem::exists(o.spill_path));
}

TEST_CASE("short partitions contribute all their elements") {
  const auto v = random_values(1001, 6);
  DistributedOptions o;
  o.workers = 3;
  const auto r = run_distributed(VectorSource{v, std::nullopt}, config(300), o);
  CHECK(r.result.values == top_values(v, 300));
  for (const auto& m : r.messages) {
    CHECK(m.local_topk.size() == 300);
    CHECK(std::is_sorted(m.local_topk.begin(), m.local_topk.end(), std::greater<>()));
  }
}

TEST_CASE("a failing worker aborts the run") {
  const auto v = gen_uniform(10000, 1);
  DistributedOptions o;
  o.workers = 3;
  o.on_worker_start = [](std::size_t w) {
    if (w == 1) throw std::runtime_error("injected");
  };
  try {
    run_distributed(VectorSource{v, std::nullopt}, config(10), o);
    FAIL("expected WorkerFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WorkerFailed);
  }
}

TEST_CASE("per-worker csv") {
  const auto v = gen_uniform(50000, 1);
  DistributedOptions o;
  o.workers = 2;
  o.max_resident = 10000;
  const auto r = run_distributed(VectorSource{v, std::nullopt}, config(16), o);
  std::ostringstream out;
  write_dist_csv(out, r);
  const std::string s = out.str();
  CHECK(s.rfind(std::string(kDistCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
  CHECK(s.find("\n0,3,2,16,") != std::string::npos);
  CHECK(s.find("\n1,2,1,16,") != std::string::npos);
}

}
