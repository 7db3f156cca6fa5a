#include <doctest.h>

#include <cmath>

#include <nailfem/rates.hpp>

using namespace nailfem;

TEST_CASE("exact power laws") {
  Series s;
  for (int i = 1; i <= 20; ++i) {
    const double x = i * 10.0;
    s.emplace_back(x, 1.0 / x);
  }
  const RateFit f = fit_rate(s, 1.0);
  CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));

  Series s2;
  for (int i = 1; i <= 10; ++i) {
    const double x = std::pow(2.0, i);
    s2.emplace_back(x, 3.0 * std::pow(x, -0.5));
  }
  const RateFit f2 = fit_rate(s2, 0.6);
  CHECK(f2.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(f2.window.second == 9);
}

TEST_CASE("perturbed power law stays in band") {
  Series s;
  for (int i = 1; i <= 40; ++i) {
    const double x = 5.0 * i * i;
    s.emplace_back(x, (1.0 + 0.01 * std::sin(std::log(x))) / x);
  }
  const RateFit f = fit_rate(s, 1.0);
  CHECK(f.slope >= -1.02);
  CHECK(f.slope <= -0.98);
}

TEST_CASE("window semantics and errors") {
  Series tiny = {{1, 1}, {2, 2}, {3, 3}};
  CHECK_THROWS_AS(fit_rate(tiny, 1.0), Error);

  Series s;
  for (int i = 1; i <= 10; ++i) s.emplace_back(i, 1.0 / i);
  CHECK_THROWS_AS(fit_rate(s, 0.0), Error);
  const RateFit f = fit_rate(s, 0.5);
  CHECK(f.window.first == 5);
  CHECK(f.window.second == 9);

  Series bad = {{1, 1}, {2, 0.5}, {-3, 1}, {4, 0.25}, {5, 0.2}};
  CHECK_THROWS_AS(fit_rate(bad, 1.0), Error);
}

TEST_CASE("last decade window") {
  Series s;
  for (int i = 0; i < 30; ++i) {
    const double x = std::pow(10.0, i / 10.0);  // 1 .. ~10^2.9
    s.emplace_back(x, 7.0 / x);
  }
  const RateFit f = fit_rate_last_decade(s);
  // only points with x >= xmax/10 enter
  CHECK(s[f.window.first].first >= s.back().first / 10.0);
  CHECK(f.window.first > 0);
  CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-12));
}
