#include "doctest.h"
#include "pens/core.hpp"
#include "pens/drift.hpp"
#include "pens/streams.hpp"

using namespace pens;

TEST_SUITE("drift") {
  TEST_CASE("hoeffding epsilon values") {
    CHECK(hoeffding_epsilon<double>(100, 100, 0.0, 1.0, 0.005) == doctest::Approx(0.11509).epsilon(1e-4));
    CHECK(hoeffding_epsilon<double>(100, 100, 0.0, 1.0, 1.0) == 0.0);
    CHECK(hoeffding_epsilon<double>(100, 100, 0.5, 0.5, 0.005) == 0.0);
    CHECK(hoeffding_epsilon<float>(100, 100, 0.0f, 1.0f, 0.005f) == doctest::Approx(0.11509f).epsilon(1e-4));
    CHECK_THROWS_AS(hoeffding_epsilon<double>(0, 10, 0.0, 1.0, 0.01), std::domain_error);
    CHECK_THROWS_AS(hoeffding_epsilon<double>(10, 0, 0.0, 1.0, 0.01), std::domain_error);
    CHECK(hoeffding_single<double>(50, 0.0, 1.0, 0.001) ==
          doctest::Approx(std::sqrt(std::log(1000.0) / 100.0)));
  }

  TEST_CASE("hoeffding epsilon monotonicity") {
    for (std::uint64_t c = 10; c < 500; c += 37) {
      const double e = hoeffding_epsilon<double>(c, 50, 0.0, 1.0, 0.01);
      CHECK(hoeffding_epsilon<double>(c + 1, 50, 0.0, 1.0, 0.01) < e);
      // Compared with the full-history mean, more post-cut data widens the
      // slack towards the single-mean bound at the cut.
      CHECK(hoeffding_epsilon<double>(c, 51, 0.0, 1.0, 0.01) > e);
      CHECK(e < hoeffding_single<double>(c, 0.0, 1.0, 0.01));
      CHECK(hoeffding_epsilon<double>(c, 50, 0.0, 1.0, 0.001) > e);
    }
  }

  TEST_CASE("first sample is stable and bad input is rejected") {
    DriftMonitor m(0.005, 0.001);
    CHECK(m.observe(1.0) == DriftState::kStable);
    CHECK(m.total_n() == 1);
    CHECK_THROWS_AS(m.observe(1.5), DataError);
    CHECK_THROWS_AS(m.observe(-0.1), DataError);
    CHECK_THROWS_AS(DriftMonitor(0.0, 0.001), ConfigError);
  }

  TEST_CASE("counts stay consistent") {
    DriftMonitor m(0.005, 0.001);
    Rng rng(2);
    for (int t = 0; t < 3000; ++t) {
      m.observe(rng.uniform() < (t < 1500 ? 0.1 : 0.3) ? 1.0 : 0.0);
      REQUIRE(m.post_n() + m.cut_n() == m.total_n());
      REQUIRE(m.total_mean() >= 0.0);
      REQUIRE(m.total_mean() <= 1.0);
    }
  }

  TEST_CASE("error rise raises drift and resets") {
    DriftMonitor m(0.005, 0.001);
    for (int t = 0; t < 500; ++t) m.observe(0.0);
    DriftState s = DriftState::kStable;
    int steps = 0;
    while (s != DriftState::kDrift && steps < 500) {
      s = m.observe(1.0);
      ++steps;
    }
    CHECK(s == DriftState::kDrift);
    CHECK(steps < 50);
    CHECK(m.total_n() == 0);
    CHECK(m.state() == DriftState::kDrift);
    CHECK(m.observe(0.0) == DriftState::kStable);
  }

  TEST_CASE("improving error never signals") {
    DriftMonitor m(0.005, 0.001);
    Rng rng(6);
    for (int t = 0; t < 4000; ++t) {
      const double p = t < 2000 ? 0.4 : 0.05;
      CHECK(m.observe(rng.uniform() < p ? 1.0 : 0.0) != DriftState::kDrift);
    }
  }

  TEST_CASE("identical sequences give identical states") {
    DriftMonitor a(0.005, 0.001), b(0.005, 0.001);
    Rng ra(10), rb(10);
    for (int t = 0; t < 3000; ++t) {
      const double x = ra.uniform() < (t < 1000 ? 0.1 : 0.5) ? 1.0 : 0.0;
      const double y = rb.uniform() < (t < 1000 ? 0.1 : 0.5) ? 1.0 : 0.0;
      REQUIRE(a.observe(x) == b.observe(y));
    }
  }

  TEST_CASE("calibration on Bernoulli streams") {
    int quiet = 0;
    int caught = 0;
    for (int run = 0; run < 100; ++run) {
      Rng rng(static_cast<std::uint64_t>(run) + 1);
      DriftMonitor m(0.005, 0.001);
      bool fired = false;
      for (int t = 0; t < 5000; ++t) fired |= m.observe(rng.uniform() < 0.1 ? 1.0 : 0.0) == DriftState::kDrift;
      quiet += !fired;

      DriftMonitor step(0.005, 0.001);
      bool early = false;
      bool hit = false;
      for (int t = 0; t < 2300 && !hit; ++t) {
        const auto s = step.observe(rng.uniform() < (t < 2000 ? 0.1 : 0.4) ? 1.0 : 0.0);
        if (s == DriftState::kDrift) {
          if (t < 2000) early = true;
          else hit = true;
        }
      }
      caught += hit && !early;
    }
    CHECK(quiet >= 95);
    CHECK(caught >= 95);
  }

  TEST_CASE("restore") {
    DriftMonitor m(0.005, 0.001);
    m.restore(10, 3.0, 6, 1.0, 4, 2.0, DriftState::kWarning);
    CHECK(m.total_n() == 10);
    CHECK(m.post_mean() == doctest::Approx(0.5));
    CHECK(m.state() == DriftState::kWarning);
    CHECK_THROWS_AS(m.restore(10, 3.0, 6, 1.0, 3, 2.0, DriftState::kStable), DataError);
  }
}
