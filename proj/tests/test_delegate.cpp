#include <doctest.h>

#include "dtk/delegate.hpp"
#include "support.hpp"

using namespace dtk;
using namespace dtk::test;

namespace {

std::vector<Value> values_of(const DelegateVector& d) {
  std::vector<Value> out;
  for (const auto& e : d.entries) out.push_back(e.value);
  return out;
}

/// Per-slice sort oracle, zero-padded to beta entries.
std::vector<KeyedEntry> slice_oracle(std::span<const Value> v, unsigned alpha, unsigned beta) {
  const std::size_t len = std::size_t{1} << alpha;
  std::vector<KeyedEntry> out;
  for (std::size_t s = 0; s * len < v.size(); ++s) {
    const auto slice = v.subspan(s * len, std::min(len, v.size() - s * len));
    auto top = top_values(slice, std::min<std::size_t>(beta, slice.size()));
    top.resize(beta, 0);
    for (Value x : top) out.push_back({x, static_cast<std::uint32_t>(s)});
  }
  return out;
}

}  // namespace

TEST_SUITE("delegate") {

TEST_CASE("one delegate per subrange of the example vector") {
  const auto d = extract_delegates(kExample, 2, 1);
  CHECK(values_of(d) == std::vector<Value>{3012, 2313, 3210, 2321});
  for (std::uint32_t s = 0; s < 4; ++s) CHECK(d.entries[s].tag == s);
  CHECK(d.subrange_count == 4);
}

TEST_CASE("two delegates per subrange of the example vector") {
  const auto d = extract_delegates_blocked(kExample, 2, 2);
  REQUIRE(d.entries.size() == 8);
  // Subrange 2 holds {3000, 3010, 1002, 3210}.
  CHECK(d.entries[4] == KeyedEntry{3210, 2});
  CHECK(d.entries[5] == KeyedEntry{3010, 2});
  CHECK(d.entries == extract_delegates(kExample, 2, 2).entries);
}

TEST_CASE("a single subrange yields the global maximum") {
  const auto v = random_values(1024, 5);
  const auto d = extract_delegates(v, 10, 1);
  REQUIRE(d.entries.size() == 1);
  CHECK(d.entries[0] == KeyedEntry{*std::max_element(v.begin(), v.end()), 0});
}

TEST_CASE("delegates match a per-slice sort") {
  const auto v = random_values(std::size_t{1} << 20, 17);
  const auto d = extract_delegates(v, 10, 2);
  CHECK(d.entries == slice_oracle(v, 10, 2));
}

TEST_CASE("delegate vector length") {
  const auto v = random_values(std::size_t{1} << 20, 2);
  CHECK(extract_delegates_blocked(v, 4, 2).entries.size() == 2 * (std::size_t{1} << 16));
  for (std::size_t n : {16ul, 17ul, 100ul, 1000ul, 4099ul}) {
    const auto w = random_values(n, n);
    for (unsigned alpha = 1; (std::size_t{1} << alpha) <= n && alpha <= 9; ++alpha)
      for (unsigned beta = 1; beta < (1u << alpha) && beta <= 5; ++beta)
        CHECK(build_delegates(w, alpha, beta).entries.size() == beta * subrange_count(n, alpha));
  }
}

TEST_CASE("blocked and plain extraction agree") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const std::size_t n = 37 + seed * 811;
    const auto v = random_values(n, seed, 0, seed % 2 ? 60u : 0xFFFFFFFFu);
    for (unsigned alpha = 1; alpha <= kBlockedMaxAlpha; ++alpha) {
      for (unsigned beta = 1; beta < (1u << alpha) && beta <= 6; ++beta) {
        CAPTURE(seed);
        CAPTURE(alpha);
        CAPTURE(beta);
        const auto plain = extract_delegates(v, alpha, beta);
        const auto blocked = extract_delegates_blocked(v, alpha, beta);
        CHECK(plain.entries == blocked.entries);
        CHECK(plain.entries == slice_oracle(v, alpha, beta));
      }
    }
  }
}

TEST_CASE("delegates match the oracle across sizes, alphas and betas") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const std::size_t n = (std::size_t{1} << 14) + seed * 333;
    const auto v = random_values(n, seed * 3, 0, seed % 3 == 0 ? 1000u : 0xFFFFFFFFu);
    for (unsigned alpha : {4u, 5u, 6u, 7u, 9u, 12u}) {
      for (unsigned beta : {1u, 2u, 3u, 4u, 7u}) {
        CAPTURE(alpha);
        CAPTURE(beta);
        CHECK(build_delegates(v, alpha, beta, DelegateOptions{2, nullptr}).entries == slice_oracle(v, alpha, beta));
      }
    }
  }
}

TEST_CASE("short final subrange is padded with zeros") {
  const std::vector<Value> v = {7, 9, 8, 6, 5};
  const auto d = extract_delegates(v, 2, 3);
  REQUIRE(d.entries.size() == 6);
  CHECK(d.entries[3] == KeyedEntry{5, 1});
  CHECK(d.entries[4] == KeyedEntry{0, 1});
  CHECK(d.entries[5] == KeyedEntry{0, 1});
}

TEST_CASE("remaining elements never exceed the last delegate") {
  const auto v = random_values(5000, 23, 0, 400);
  const unsigned alpha = 6, beta = 3;
  const auto d = extract_delegates(v, alpha, beta);
  const std::size_t len = std::size_t{1} << alpha;
  for (std::size_t s = 0; s < d.subrange_count; ++s) {
    const auto* ent = &d.entries[s * beta];
    for (unsigned j = 1; j < beta; ++j) CHECK(ent[j - 1].value >= ent[j].value);
    std::vector<Value> rest(v.begin() + s * len, v.begin() + std::min(v.size(), (s + 1) * len));
    for (unsigned j = 0; j < beta; ++j) {
      auto it = std::find(rest.begin(), rest.end(), ent[j].value);
      REQUIRE(it != rest.end());
      rest.erase(it);
    }
    for (Value x : rest) CHECK(x <= ent[beta - 1].value);
  }
}

TEST_CASE("extraction reads every element once") {
  const auto v = random_values(10000, 1);
  Counters c;
  extract_delegates(v, 5, 2, DelegateOptions{0, &c});
  CHECK(c.elements_read.load() == v.size());
  Counters b;
  extract_delegates_blocked(v, 5, 2, DelegateOptions{0, &b});
  CHECK(b.elements_read.load() == v.size());
}

TEST_CASE("invalid delegate arguments") {
  const auto v = random_values(64, 1);
  auto code = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code([&] { extract_delegates(v, 2, 4); }) == ErrorCode::InvalidBeta);
  CHECK(code([&] { extract_delegates(v, 2, 0); }) == ErrorCode::InvalidBeta);
  CHECK(code([&] { extract_delegates_blocked(v, 3, 8); }) == ErrorCode::InvalidBeta);
  CHECK(code([&] { extract_delegates(v, 7, 1); }) == ErrorCode::InvalidConfig);
  CHECK(code([&] { extract_delegates_blocked(v, 6, 1); }) == ErrorCode::InvalidConfig);
}

}
