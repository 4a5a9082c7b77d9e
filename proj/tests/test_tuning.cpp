#include <doctest.h>

#include "dtk/data.hpp"
#include "dtk/tuning.hpp"
#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace dtk;
using namespace dtk::test;

namespace {

double total(unsigned alpha, double k, double n, const CostModelParams& p = {}) {
  return model_cost(alpha, k, n, p).total;
}

unsigned grid_argmin(double k, double n, const CostModelParams& p = {}) {
  unsigned best = 0;
  for (unsigned a = 1; a <= static_cast<unsigned>(std::log2(n)); ++a)
    if (total(a, k, n, p) < total(best, k, n, p)) best = a;
  return best;
}

}  // namespace

TEST_SUITE("tuning") {

TEST_CASE("auto alpha anchors") {
  CHECK(auto_alpha(std::size_t{1} << 30, std::size_t{1} << 24, 3) == 4);
  CHECK(auto_alpha(std::size_t{1} << 30, std::size_t{1} << 19, 3) == 7);
  CHECK(auto_alpha(std::size_t{1} << 24, std::size_t{1} << 10, 3) == 8);
}

TEST_CASE("auto alpha with k equal to n raises the fallback") {
  const std::size_t n = std::size_t{1} << 30;
  const unsigned a = auto_alpha(n, n, 3);
  CHECK(a <= 1);
  PipelineConfig c;
  c.k = n;
  CHECK(validate_config(c, n).direct_fallback);
}

TEST_CASE("auto alpha keeps the delegate vector at least k long") {
  for (std::size_t n : {100ul, 1000ul, 1ul << 16, 1ul << 20}) {
    for (std::size_t k = 1; k <= n; k = k * 3 + 1) {
      for (unsigned beta : {1u, 2u, 3u}) {
        const unsigned a = auto_alpha(n, k, 3, beta);
        CHECK((std::size_t{1} << a) <= n);
        if (a > 0) CHECK(beta * subrange_count(n, a) >= k);
      }
    }
  }
}

TEST_CASE("delegate term tends to a pure scan") {
  const double n = 1 << 20;
  const auto c = model_cost(60, 1, n);
  CHECK(c.t_delegate == doctest::Approx(n).epsilon(1e-9));
}

TEST_CASE("stage terms") {
  const CostModelParams p{2.0, 3.0, 3.0};
  const double n = 1 << 20, k = 64, a = 5, s = 32;
  const auto c = model_cost(a, k, n, p);
  CHECK(c.t_delegate == doctest::Approx((1 + 1 / s) * n * 2 + 31 * n / s * 3));
  CHECK(c.t_firstk == doctest::Approx(5 * n / s * 2 + 2 * k * 2));
  CHECK(c.t_concat == doctest::Approx(k * 2 + 2 * k * s * 2));
  CHECK(c.t_secondk == doctest::Approx(4 * k * s * 2));
  // The closed-form total carries 2k where the stage terms add up to 3k.
  const double stage_sum = c.t_delegate + c.t_firstk + c.t_concat + c.t_secondk;
  CHECK(c.total == doctest::Approx(stage_sum - k * p.c_global));
}

TEST_CASE("model is U-shaped in alpha") {
  const double n = std::exp2(30), k = std::exp2(13);
  for (unsigned a = 4; a <= 20; ++a) CHECK(model_second_difference(a, k, n) > 0);
}

TEST_CASE("auto alpha minimizes the model on the grid") {
  const double n = std::exp2(30), k = std::exp2(19);
  const unsigned a = auto_alpha(std::size_t{1} << 30, std::size_t{1} << 19, 3);
  CHECK(total(a, k, n) <= total(a - 1, k, n));
  CHECK(total(a, k, n) <= total(a + 1, k, n));
  for (auto [ln, lk] : {std::pair{24, 10}, {30, 13}, {30, 19}, {30, 24}, {26, 7}})
    CHECK(std::abs(static_cast<int>(auto_alpha(std::size_t{1} << ln, std::size_t{1} << lk, 3)) -
                   static_cast<int>(grid_argmin(std::exp2(lk), std::exp2(ln)))) <= 1);
}

TEST_CASE("model convexity holds for other parameters") {
  for (double cg : {0.5, 1.0, 4.0})
    for (double cs : {0.1, 1.0, 10.0})
      for (double a = 1; a < 25; ++a)
        CHECK(model_second_difference(a, 1 << 10, std::exp2(28), CostModelParams{cg, cs, 3}) >= 0);
}

TEST_CASE("stage terms move in opposite directions") {
  const double n = std::exp2(26), k = 1 << 12;
  for (unsigned a = 0; a < 24; ++a) {
    const auto lo = model_cost(a, k, n), hi = model_cost(a + 1, k, n);
    CHECK(hi.t_delegate <= lo.t_delegate);
    CHECK(hi.t_firstk <= lo.t_firstk);
    CHECK(hi.t_concat >= lo.t_concat);
    CHECK(hi.t_secondk >= lo.t_secondk);
  }
}

TEST_CASE("sweep emits one verified row per point") {
  const auto v = gen_uniform(std::size_t{1} << 18, 3);
  PipelineConfig base;
  base.k = 512;
  const std::vector<unsigned> one = {6};
  const auto rows = sweep(v, base, SweepParam::alpha, one);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].alpha == 6);
  CHECK(rows[0].delegate_len == 2 * (std::size_t{1} << 12));
  CHECK(rows[0].total_ns == rows[0].t_delegate_ns + rows[0].t_firstk_ns + rows[0].t_concat_ns + rows[0].t_secondk_ns);

  const std::vector<unsigned> betas = {1, 2, 3, 4};
  const auto brows = sweep(v, base, SweepParam::beta, betas, SweepOptions{2});
  REQUIRE(brows.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(brows[i].beta == i + 1);
}

TEST_CASE("sweep csv layout") {
  std::vector<SweepRow> rows(2);
  rows[1].alpha = 7;
  std::ostringstream out;
  write_sweep_csv(out, rows);
  const std::string s = out.str();
  CHECK(s.rfind("alpha,beta,k,n,t_delegate_ns,t_firstk_ns,t_concat_ns,t_secondk_ns,total_ns,delegate_len,concat_len\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
  CHECK(s.find("\r") == std::string::npos);
  CHECK(s.find("\n7,") != std::string::npos);
}

}
