#include <doctest.h>

#include <random>

#include <nailfem/marking.hpp>

using namespace nailfem;

namespace {

LocalEstimators make_est(std::vector<double> eta_sq) {
  LocalEstimators est;
  est.eta_sq = Eigen::Map<Eigen::VectorXd>(eta_sq.data(),
                                           static_cast<long>(eta_sq.size()));
  est.total = std::sqrt(est.eta_sq.sum());
  return est;
}

/// Brute-force minimal cardinality of a Doerfler set over all subsets,
/// with the 1e-12 summation slack the property itself carries.
int brute_force_min(const Eigen::VectorXd& eta_sq, double theta) {
  const int n = static_cast<int>(eta_sq.size());
  const double total = eta_sq.sum();
  const double target = theta * total;
  int best = n + 1;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    double s = 0.0;
    int card = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        s += eta_sq[i];
        ++card;
      }
    }
    if (s >= target - 1e-12 * total) best = std::min(best, card);
  }
  return best;
}

}  // namespace

TEST_CASE("doerfler examples") {
  CHECK(doerfler_mark(make_est({4, 1, 1, 1, 1}), {0.5, 1.0}).indices() ==
        std::vector<int>{0});
  CHECK(doerfler_mark(make_est({1, 0}), {1.0, 1.0}).indices() ==
        std::vector<int>{0});
  // tie between elements 0 and 1 broken by the lower index
  CHECK(doerfler_mark(make_est({2, 2, 1}), {0.4, 1.0}).indices() ==
        std::vector<int>{0});
}

TEST_CASE("doerfler validation and degenerate input") {
  CHECK_THROWS_AS(doerfler_mark(make_est({}), {0.5, 1.0}), Error);
  CHECK_THROWS_AS(doerfler_mark(make_est({1.0}), {0.0, 1.0}), Error);
  CHECK_THROWS_AS(doerfler_mark(make_est({1.0}), {1.1, 1.0}), Error);
  CHECK_THROWS_AS(doerfler_mark(make_est({1.0}), {0.5, 0.5}), Error);
  CHECK(doerfler_mark(make_est({0, 0, 0}), {0.5, 1.0}).empty());
}

TEST_CASE("doerfler property, minimality, and theta = 1") {
  std::mt19937_64 rng(2718281);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_int_distribution<int> coin(0, 3);

  for (int trial = 0; trial < 400; ++trial) {
    const int n = len(rng);
    std::vector<double> eta(n);
    for (double& e : eta) e = (coin(rng) == 0) ? 0.0 : U(rng);
    const double theta = (trial % 10 == 0) ? 1.0 : U(rng) * 0.999 + 0.001;
    const auto est = make_est(eta);
    const auto marked = doerfler_mark(est, {theta, 1.0});

    double sum = 0.0;
    for (int i : marked.indices()) sum += est.eta_sq[i];
    CHECK(sum >= theta * est.eta_sq.sum() - 1e-12);

    CHECK(static_cast<int>(marked.size()) ==
          brute_force_min(est.eta_sq, theta));

    if (theta == 1.0) {
      // marks exactly the support
      int support = 0;
      for (double e : eta) support += (e > 0.0);
      CHECK(static_cast<int>(marked.size()) == support);
    }
  }
}

TEST_CASE("doerfler determinism under ties") {
  const auto est = make_est({3, 3, 3, 3});
  const auto a = doerfler_mark(est, {0.5, 1.0});
  const auto b = doerfler_mark(est, {0.5, 1.0});
  CHECK(a.indices() == b.indices());
  CHECK(a.indices() == std::vector<int>{0, 1});
}
