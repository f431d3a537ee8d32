#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "clockrand/clock.hpp"

using namespace clockrand;

namespace {

// Brute force over the 2^4 edge / no-edge outcomes.
std::array<double, 5> enumerate(const std::array<double, 4>& p) {
  std::array<double, 5> d{};
  for (unsigned mask = 0; mask < 16; ++mask) {
    double prob = 1.0;
    int k = 0;
    for (unsigned i = 0; i < 4; ++i) {
      const bool on = (mask >> i) & 1u;
      prob *= on ? p[i] : 1.0 - p[i];
      k += on ? 1 : 0;
    }
    d[static_cast<std::size_t>(k)] += prob;
  }
  return d;
}

// Number of multisets of size r drawn from n kinds, by explicit listing of
// non-decreasing sequences.
std::size_t count_multisets(int n, int r) {
  std::set<std::vector<int>> seen;
  std::vector<int> seq(static_cast<std::size_t>(r), 0);
  while (true) {
    seen.insert(seq);
    int i = r - 1;
    while (i >= 0 && seq[static_cast<std::size_t>(i)] == n - 1) --i;
    if (i < 0) break;
    const int v = seq[static_cast<std::size_t>(i)] + 1;
    for (int j = i; j < r; ++j) seq[static_cast<std::size_t>(j)] = v;
  }
  return seen.size();
}

}  // namespace

TEST_CASE("rising_edge_probability") {
  const double tb = 1e-7;
  CHECK(rising_edge_probability(2 * tb, tb) == doctest::Approx(0.5));
  CHECK(rising_edge_probability(tb, tb) == 1.0);
  CHECK(rising_edge_probability(0.5 * tb, tb) == 1.0);
  CHECK_THROWS_AS(rising_edge_probability(0.0, tb), std::invalid_argument);
  CHECK_THROWS_AS(rising_edge_probability(tb, -1.0), std::invalid_argument);
}

TEST_CASE("double_edge_probability") {
  const double tb = 1e-7;
  CHECK(double_edge_probability(tb, tb).value == 0.0);
  CHECK(double_edge_probability(0.8 * tb, tb).value == doctest::Approx(0.25));
  CHECK(double_edge_probability(2 * tb, tb).value == 0.0);
  const auto c = double_edge_probability(0.4 * tb, tb);
  CHECK(c.value == 1.0);
  CHECK(c.clamped);
  CHECK_FALSE(double_edge_probability(0.6 * tb, tb).clamped);
  CHECK_THROWS_AS(double_edge_probability(-1.0, tb), std::invalid_argument);
}

TEST_CASE("edge_count_distribution examples") {
  auto d = edge_count_distribution({1, 1, 1, 1});
  CHECK(d.p == std::array<double, 5>{0, 0, 0, 0, 1});
  d = edge_count_distribution({0, 0, 0, 0});
  CHECK(d.p == std::array<double, 5>{1, 0, 0, 0, 0});
  d = edge_count_distribution({0.5, 0.5, 0.5, 0.5});
  const std::array<double, 5> expect{1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
  for (int k = 0; k < 5; ++k) CHECK(d.p[k] == doctest::Approx(expect[k]).epsilon(1e-12));
  CHECK_THROWS_AS(edge_count_distribution({0.5, 1.5, 0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(edge_count_distribution({-0.1, 0.5, 0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("edge_count_distribution matches 2^4 enumeration") {
  Rng rng(123);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<double, 4> p{};
    for (auto& x : p) x = trial % 7 == 0 ? static_cast<double>(rng.index(2)) : rng.uniform();
    const auto d = edge_count_distribution(p);
    const auto e = enumerate(p);
    double sum = 0.0;
    for (int k = 0; k < 5; ++k) {
      CHECK(std::abs(d.p[k] - e[k]) <= 1e-12);
      CHECK(d.p[k] >= 0.0);
      CHECK(d.p[k] <= 1.0);
      sum += d.p[k];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("permutation_count") {
  CHECK(permutation_count(0) == 16);
  CHECK(permutation_count(1) == 24);
  CHECK(permutation_count(2) == 16);
  CHECK(permutation_count(3) == 8);
  CHECK(permutation_count(4) == 0);
  CHECK_THROWS_AS(permutation_count(5), std::invalid_argument);
  CHECK_THROWS_AS(permutation_count(-1), std::invalid_argument);
}

TEST_CASE("completion_time_count") {
  CHECK(completion_time_count(1, 10) == 1);
  CHECK(completion_time_count(4, 10) == 286);
  CHECK(completion_time_count(2, 2) == 3);
  for (int n = 1; n <= 4; ++n) {
    for (int r = 1; r <= 6; ++r) CHECK(completion_time_count(n, r) == count_multisets(n, r));
  }
  // C(67, 33) fits in 64 bits, C(100, 50) does not.
  CHECK(completion_time_count(35, 33) == 14226520737620288370ULL);
  CHECK_THROWS_AS(completion_time_count(51, 50), std::overflow_error);
  CHECK_THROWS_AS(completion_time_count(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(completion_time_count(3, 0), std::invalid_argument);
}

TEST_CASE("joint edge counts follow the product model") {
  for (const auto& fs : reference_sets()) {
    const std::size_t n = 100000;
    const auto counts = joint_edge_counts(fs, n);
    std::array<double, 4> p{};
    for (std::size_t i = 0; i < 4; ++i) p[i] = rising_edge_probability(fs.period(i), fs.base_period());
    const auto d = edge_count_distribution(p);
    double tv = 0.0;
    for (std::size_t k = 0; k < 5; ++k) tv += std::abs(static_cast<double>(counts[k]) / n - d.p[k]);
    CHECK_MESSAGE(tv / 2 <= 0.02, fs.label);
  }
}
