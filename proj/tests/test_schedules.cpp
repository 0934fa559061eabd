#include <doctest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "ibpg/errors.hpp"
#include "ibpg/schedules.hpp"

using namespace ibpg;

TEST_CASE("closed-form theta values") {
  CHECK(theta_closed_form(1, 5.0, 2.0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(theta_closed_form(0, 5.0, 2.0) == 1.0);
  CHECK(theta_closed_form(0, 7.5, 1.0) == 1.0);
  CHECK(theta_closed_form(10, 5.0, 2.0) == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
  CHECK_THROWS_AS(theta_closed_form(3, 2.5, 2.0), ConfigError);
  CHECK_THROWS_AS(ThetaSchedule::closed_form(2.5, 2.0), ConfigError);
}

TEST_CASE("root-find theta solves the equality") {
  CHECK(theta_root_find(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  const double th = theta_root_find(1.0, 2.0);
  CHECK(th == doctest::Approx(golden).epsilon(1e-14));
  CHECK(std::abs((1.0 - th) / (th * th) - 1.0) <= 1e-14);
}

TEST_CASE("root-find sequence stays above 1/(k+gamma) and keeps the equality") {
  const auto sched = ThetaSchedule::root_find(2.0);
  for (std::size_t k = 0; k <= 100000; ++k) {
    const double th = sched.theta(static_cast<long long>(k));
    if (th < 1.0 / (static_cast<double>(k) + 2.0)) {
      FAIL("theta_" << k << " below 1/(k+2)");
    }
    if (k >= 1) {
      const double prev = std::pow(sched.theta(static_cast<long long>(k) - 1), -2.0);
      const double residual = (1.0 - th) / (th * th) - prev;
      if (std::abs(residual) > 1e-12 * prev) FAIL("equality residual at k=" << k);
    }
  }
}

TEST_CASE("vartheta values") {
  const auto closed = ThetaSchedule::closed_form(5.0, 2.0);
  CHECK(closed.vartheta(0) == 1.0);
  CHECK(closed.theta(-1) == 1.0);
  CHECK(closed.theta(0) == 1.0);

  const auto root = ThetaSchedule::root_find(2.0);
  CHECK(root.vartheta(0) == 1.0);
  for (std::size_t k = 1; k <= 1000; ++k) {
    const double scale = std::pow(root.theta(static_cast<long long>(k) - 1), -2.0);
    CHECK(root.vartheta(k) >= 0.0);
    CHECK(root.vartheta(k) <= 1e-12 * scale);
  }

  double sum = 0.0;
  for (std::size_t k = 0; k <= 10000; ++k) {
    sum += closed.vartheta(k);
    const double bound = 2.0 + std::pow(static_cast<double>(k) + 3.0, 2.0) / 2.0;
    if (sum > bound) FAIL("partial sum exceeds bound at k=" << k);
  }
}

TEST_CASE("vartheta rejects schedules that decay too fast") {
  const auto fast = ThetaSchedule::from_function(2.0, [](std::size_t k) { return 1.0 / double(k * k); });
  CHECK(fast.vartheta_raw(2) < 0.0);
  CHECK_THROWS_AS(fast.vartheta(2), ScheduleError);
}

TEST_CASE("theta validation") {
  SUBCASE("closed form, alpha = 5, gamma = 2") {
    const auto v = validate_theta(ThetaSchedule::closed_form(5.0, 2.0), 100000);
    CHECK(v.passed);
    CHECK(v.checked_up_to == 100000);
    CHECK(v.max_prefactor_sum <= prefactor_sum_bound(5.0, 2.0));
  }
  SUBCASE("closed form, alpha = 5, gamma = 1") {
    CHECK(validate_theta(ThetaSchedule::closed_form(5.0, 1.0), 100000).passed);
  }
  SUBCASE("root-find, gamma = 1 and 2") {
    CHECK(validate_theta(ThetaSchedule::root_find(1.0), 100000).passed);
    CHECK(validate_theta(ThetaSchedule::root_find(2.0), 100000).passed);
  }
  SUBCASE("1/k^2 fails the vartheta condition early") {
    const auto v = validate_theta(
        ThetaSchedule::from_function(2.0, [](std::size_t k) { return 1.0 / double(k * k); }), 100);
    CHECK_FALSE(v.passed);
    REQUIRE(v.first_violation.has_value());
    CHECK(*v.first_violation <= 3);
    CHECK(v.condition == "vartheta_k >= 0");
  }
}

TEST_CASE("prefactor times partial vartheta sums stays bounded") {
  const auto sched = ThetaSchedule::closed_form(5.0, 2.0);
  const double bound = prefactor_sum_bound(5.0, 2.0);
  CHECK(bound == doctest::Approx(2.0 + 16.0 / 2.0));
  double sum = 0.0;
  for (std::size_t k = 0; k <= 10000; ++k) {
    sum += sched.vartheta(k);
    const double pref = std::pow(4.0 / (static_cast<double>(k) + 4.0), 2.0);
    if (pref * sum > bound) FAIL("prefactor bound fails at k=" << k);
  }
}

TEST_CASE("theta cache is shared and thread-safe") {
  const auto sched = ThetaSchedule::root_find(2.0);
  std::vector<double> a(2000), b(2000);
  std::thread t1([&] { for (std::size_t k = 0; k < a.size(); ++k) a[k] = sched.theta(static_cast<long long>(k)); });
  std::thread t2([&] { for (std::size_t k = b.size(); k-- > 0;) b[k] = sched.theta(static_cast<long long>(k)); });
  t1.join();
  t2.join();
  CHECK(a == b);
  const auto copy = sched;
  CHECK(copy.theta(1999) == sched.theta(1999));
}

TEST_CASE("tolerance triples from the power rule") {
  const auto s11 = ToleranceSchedule::power_rule(1.1);
  CHECK(s11.at(0).mu == 1.0);
  CHECK(s11.at(0).eta == 0.0);
  CHECK(s11.at(0).nu == 0.0);
  CHECK(ToleranceSchedule::power_rule(3.1).at(9).mu == doctest::Approx(std::pow(10.0, -3.1)).epsilon(1e-14));
  // (k+1)^{-1.1} reaches 1e-10 only past k ≈ 1.23e9.
  CHECK(s11.at(1000000).mu == doctest::Approx(std::pow(1e6 + 1.0, -1.1)).epsilon(1e-14));
  CHECK(s11.at(1000000).mu > 1e-10);
  CHECK(s11.at(2000000000).mu == 1e-10);
  CHECK(ToleranceSchedule::power_rule(3.1).at(1000000).mu == 1e-10);
  const auto exact = ToleranceSchedule::exact();
  CHECK(exact.at(5).mu == 0.0);
}

TEST_CASE("iterate-normalized tolerances need the iterate norm") {
  ToleranceSchedule s;
  s.eta = DecaySequence::power(2.0);
  s.normalization = Normalization::iterate_normalized;
  CHECK_THROWS_AS(s.at(3), ConfigError);
  CHECK(s.at(3, 1.0).eta == doctest::Approx(1.0 / 16.0 / 2.0));
  CHECK_THROWS_AS(ToleranceSchedule{DecaySequence::constant(-1.0)}.validate(), ConfigError);
}

TEST_CASE("decay sequences") {
  CHECK(DecaySequence::zero().at(4) == 0.0);
  CHECK(DecaySequence::constant(0.5).at(100) == 0.5);
  CHECK(DecaySequence::power(2.0, 3.0).at(1) == doctest::Approx(0.75));
  CHECK(DecaySequence::geometric(0.5).at(3) == doctest::Approx(0.125));
}

TEST_CASE("summability classification") {
  const auto c31 = summability_class(ToleranceSchedule::power_rule(3.1), 2.0);
  CHECK(c31.avg_rate);
  CHECK(c31.last_iterate_rate);
  CHECK(c31.vibpg_rate);

  const auto c11 = summability_class(ToleranceSchedule::power_rule(1.1), 2.0);
  CHECK(c11.avg_rate);
  CHECK(c11.vibpg_rate);
  CHECK_FALSE(c11.last_iterate_rate);
  CHECK(c11.label() == "avg-rate+vibpg-rate");

  const auto c01 = summability_class(ToleranceSchedule::power_rule(0.1), 2.0);
  CHECK(c01.label() == "insufficient");
  CHECK_FALSE(c01.sufficient_for(SolverKind::ibpg));
  CHECK_FALSE(c01.sufficient_for(SolverKind::vibpg));

  ToleranceSchedule eta_only;
  eta_only.eta = DecaySequence::power(1.5);
  const auto ce = summability_class(eta_only, 2.0);
  CHECK(ce.avg_rate);
  CHECK_FALSE(ce.vibpg_rate);  // θ^{1−γ}η ~ k^{-0.5}

  ToleranceSchedule geo;
  geo.mu = DecaySequence::geometric(0.9);
  CHECK(summability_class(geo, 2.0).label() == "avg-rate+last-iterate-rate+vibpg-rate");

  ToleranceSchedule bad;
  bad.mu.form = static_cast<DecaySequence::Form>(42);
  CHECK(summability_class(bad, 2.0).label() == "unclassified");
}

TEST_CASE("Cesaro averages of a summable sequence vanish") {
  // α_i = i^{-2}: (1/k) Σ_{i<k} i·α_i = H_{k−1}/k ≤ (1 + ln k)/k.
  const std::size_t k = 100000;
  double sum = 0.0;
  for (std::size_t i = 1; i < k; ++i) sum += static_cast<double>(i) / (static_cast<double>(i) * static_cast<double>(i));
  const double value = sum / static_cast<double>(k);
  const double bound = (1.0 + std::log(static_cast<double>(k))) / static_cast<double>(k);
  CHECK(value <= bound);
  CHECK(value < 10.0 * bound);
  CHECK(value < 2e-4);
}

TEST_CASE("error accumulator sums are nondecreasing") {
  ErrorAccumulator acc;
  ErrorAccumulator prev = acc;
  for (int i = 0; i < 50; ++i) {
    acc.add_ibpg(0.1 / (i + 1), 0.2 / (i + 1), 0.3, 0.01, 1.5, 1.4, 0.2, 2.0);
    acc.add_vibpg(1.0 / (i + 1), 2.0, 0.5, 0.1, 0.2, 0.01, 1.5);
    CHECK(acc.sum_eta >= prev.sum_eta);
    CHECK(acc.sum_mu >= prev.sum_mu);
    CHECK(acc.sum_i_xi >= prev.sum_i_xi);
    CHECK(acc.sum_i_mu >= prev.sum_i_mu);
    CHECK(acc.sum_theta_eta_norm1 >= prev.sum_theta_eta_norm1);
    CHECK(acc.sum_vartheta >= prev.sum_vartheta);
    prev = acc;
  }
  // ξ of the last step: η‖Δx̃‖ + L(μ + μ_prev) + ν.
  CHECK(acc.last_xi == doctest::Approx(0.1 / 50 * 0.2 + 2.0 * (0.2 / 50 + 0.3) + 0.01));
}
