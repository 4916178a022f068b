#include <random>

#include "doctest.h"
#include "genckpt/errors.hpp"
#include "genckpt/scheduler.hpp"

using namespace genckpt;

namespace {

TelemetrySample sample_at(double t, std::uint64_t cost) {
  return TelemetrySample{t, cost, 0, "stage"};
}

// Brute-force oracle: fire at i iff a full window has been seen, the cost is
// a trailing-window minimum, and the refractory interval has elapsed.
std::vector<std::size_t> oracle_triggers(const std::vector<std::uint64_t>& costs, int window,
                                         double refractory, double dt) {
  std::vector<std::size_t> fired;
  double last_fire = -1e300;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (i + 1 < static_cast<std::size_t>(window)) continue;
    double t = dt * static_cast<double>(i + 1);
    if (t - last_fire < refractory) continue;
    bool is_min = true;
    for (std::size_t j = i >= static_cast<std::size_t>(window) ? i - window + 1 : 0; j <= i; ++j)
      if (costs[j] < costs[i]) is_min = false;
    if (is_min) {
      fired.push_back(i);
      last_fire = t;
    }
  }
  return fired;
}

}  // namespace

TEST_CASE("periodic mode fires at multiples of the period") {
  CkptPolicyCfg cfg;
  cfg.mode = PolicyMode::kPeriodic;
  cfg.period_s = 600;
  TriggerDecider decider(cfg);
  std::vector<double> fired;
  for (int i = 1; i <= 30; ++i) {
    auto d = decider.on_sample(sample_at(60.0 * i, 1000));
    if (d.fire) {
      CHECK(d.reason == TriggerReason::kPeriodic);
      fired.push_back(60.0 * i);
    }
  }
  CHECK(fired == std::vector<double>{600, 1200, 1800});
}

TEST_CASE("app-initiated mode fires at the trailing-window minimum") {
  CkptPolicyCfg cfg;
  cfg.mode = PolicyMode::kAppInitiated;
  cfg.period_s = 0;  // no refractory
  cfg.window = 3;
  TriggerDecider decider(cfg);
  std::vector<std::uint64_t> series{9, 8, 3, 5, 7, 6, 2, 4};
  std::vector<std::size_t> fired;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (decider.on_sample(sample_at(60.0 * static_cast<double>(i + 1), series[i])).fire)
      fired.push_back(i);
  // 3 is the minimum of {9,8,3}; 2 of {6,2,...}
  CHECK(fired == std::vector<std::size_t>{2, 6});
}

TEST_CASE("constant cost series fires at the window boundary") {
  CkptPolicyCfg cfg;
  cfg.mode = PolicyMode::kAppInitiated;
  cfg.period_s = 0;
  cfg.window = 4;
  TriggerDecider decider(cfg);
  std::vector<std::size_t> fired;
  for (std::size_t i = 0; i < 4; ++i)
    if (decider.on_sample(sample_at(static_cast<double>(i + 1), 5000)).fire) fired.push_back(i);
  REQUIRE_FALSE(fired.empty());
  CHECK(fired.front() == 3);  // earliest sample with a full trailing window
}

TEST_CASE("refractory interval suppresses back-to-back app triggers") {
  CkptPolicyCfg cfg;
  cfg.mode = PolicyMode::kAppInitiated;
  cfg.period_s = 600;  // refractory 300
  cfg.window = 2;
  TriggerDecider decider(cfg);
  std::vector<double> fired;
  for (int i = 1; i <= 10; ++i) {
    // strictly decreasing costs: every sample is a window minimum
    if (decider.on_sample(sample_at(60.0 * i, 1000 - static_cast<std::uint64_t>(i))).fire)
      fired.push_back(60.0 * i);
  }
  for (std::size_t i = 1; i < fired.size(); ++i) CHECK(fired[i] - fired[i - 1] >= 300);
}

TEST_CASE("out-of-order telemetry is rejected") {
  TriggerDecider decider(CkptPolicyCfg{});
  decider.on_sample(sample_at(100, 1));
  CHECK_THROWS_AS(decider.on_sample(sample_at(99, 1)), TelemetryError);
  CHECK_THROWS_AS(decider.on_sample(sample_at(100, 1)), TelemetryError);
}

TEST_CASE("app triggers match the brute-force oracle on random series") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    CkptPolicyCfg cfg;
    cfg.mode = PolicyMode::kAppInitiated;
    cfg.period_s = (trial % 2) ? 600.0 : 0.0;
    cfg.window = 1 + static_cast<int>(rng() % 8);
    std::vector<std::uint64_t> costs;
    std::uniform_int_distribution<std::uint64_t> cost_dist(0, 50);
    for (int i = 0; i < 60; ++i) costs.push_back(cost_dist(rng));

    TriggerDecider decider(cfg);
    std::vector<std::size_t> fired;
    for (std::size_t i = 0; i < costs.size(); ++i)
      if (decider.on_sample(sample_at(60.0 * static_cast<double>(i + 1), costs[i])).fire)
        fired.push_back(i);
    CHECK(fired == oracle_triggers(costs, cfg.window, cfg.period_s / 2.0, 60.0));
  }
}

TEST_CASE("duration estimate arithmetic") {
  const std::uint64_t GiB = 1ull << 30;
  CkptPayload payload;
  payload.image_bytes = {200 * GiB, 50 * GiB};
  payload.precious_bytes = 50 * GiB;  // 300 GiB total

  BandwidthModel model;
  model.base_rate_bytes_per_s = 1.5 * static_cast<double>(GiB);
  model.congestion = CongestionModel::constant(1.0);
  auto e = estimate_checkpoint_duration(payload, model, 0.05);
  CHECK(e.expected_s == doctest::Approx(200.0));
  CHECK(e.upper_bound_s == doctest::Approx(200.0));

  SUBCASE("5th-percentile congestion of 0.25 quadruples the bound") {
    std::vector<double> factors(20, 1.0);
    factors[0] = 0.25;
    model.congestion = CongestionModel::trace(factors);
    auto e2 = estimate_checkpoint_duration(payload, model, 0.05);
    CHECK(e2.upper_bound_s == doctest::Approx(800.0));
    CHECK(e2.upper_bound_s >= e2.expected_s);
  }

  SUBCASE("zero payload estimates zero") {
    auto e3 = estimate_checkpoint_duration(CkptPayload{}, model, 0.05);
    CHECK(e3.expected_s == 0.0);
    CHECK(e3.upper_bound_s == 0.0);
  }

  SUBCASE("zero rate is a model error") {
    model.base_rate_bytes_per_s = 0;
    CHECK_THROWS_AS(estimate_checkpoint_duration(payload, model, 0.05), ModelError);
  }
}

TEST_CASE("estimator is monotone in payload and rate") {
  std::mt19937_64 rng(99);
  BandwidthModel model;
  model.congestion = CongestionModel::log_normal(-0.3, 0.4, 7);
  for (int trial = 0; trial < 200; ++trial) {
    CkptPayload a, b;
    a.precious_bytes = rng() % (1ull << 36);
    b.precious_bytes = a.precious_bytes + rng() % (1ull << 34);
    model.base_rate_bytes_per_s = 1e8 + static_cast<double>(rng() % (1ull << 32));
    auto ea = estimate_checkpoint_duration(a, model, 0.05);
    auto eb = estimate_checkpoint_duration(b, model, 0.05);
    CHECK(eb.expected_s >= ea.expected_s);
    CHECK(eb.upper_bound_s >= ea.upper_bound_s);

    BandwidthModel faster = model;
    faster.base_rate_bytes_per_s *= 2.0;
    auto ef = estimate_checkpoint_duration(a, faster, 0.05);
    CHECK(ef.expected_s <= ea.expected_s);
    CHECK(ef.upper_bound_s <= ea.upper_bound_s);
  }
}

TEST_CASE("walltime guard thresholds") {
  CkptPolicyCfg cfg;
  cfg.walltime_limit_s = 48 * 3600;
  cfg.safety_factor = 2.0;
  DurationEstimate est{200.0, 400.0};

  // remaining 1000 s: 1000 <= 2*400 is false -> wait
  CHECK(walltime_guard(cfg.walltime_limit_s - 1000, cfg, est) == GuardDecision::kWait);
  // remaining 700 s -> checkpoint now
  CHECK(walltime_guard(cfg.walltime_limit_s - 700, cfg, est) == GuardDecision::kCheckpointNow);
  // remaining 150 s < expected 200 s -> even a perfect run likely misses
  CHECK(walltime_guard(cfg.walltime_limit_s - 150, cfg, est) ==
        GuardDecision::kTooLateWarning);
  // plenty of time -> wait
  CHECK(walltime_guard(0, cfg, est) == GuardDecision::kWait);
}

TEST_CASE("telemetry CSV round-trips") {
  std::vector<TelemetrySample> samples{
      {10.5, 1000, 200, "kmer_count"},
      {20.5, 3000, 400, "graph_build"},
  };
  auto parsed = telemetry_from_csv(telemetry_to_csv(samples));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].t == doctest::Approx(20.5));
  CHECK(parsed[1].footprint_bytes == 3000);
  CHECK(parsed[1].stage_label == "graph_build");
}
