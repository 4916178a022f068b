#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "genckpt/bandwidth.hpp"

namespace genckpt {

struct TelemetrySample {
  double t = 0;  // seconds since job start, strictly increasing per stream
  std::uint64_t footprint_bytes = 0;
  std::uint64_t precious_bytes = 0;
  std::string stage_label;
};

std::string telemetry_to_csv(const std::vector<TelemetrySample>& samples);
std::vector<TelemetrySample> telemetry_from_csv(const std::string& csv);

enum class PolicyMode { kPeriodic, kAppInitiated, kWalltimeOnly, kCombined };
enum class CostMetric { kSum, kFootprintOnly, kPreciousOnly };
enum class TriggerReason { kPeriodic, kAppInitiated, kWalltimeGuard, kManual };

const char* to_string(TriggerReason r);

struct CkptPolicyCfg {
  PolicyMode mode = PolicyMode::kPeriodic;
  double period_s = 600.0;
  int window = 10;
  double walltime_limit_s = 172800.0;  // 48 h
  double safety_factor = 2.0;
  CostMetric cost_metric = CostMetric::kSum;
  double congestion_percentile = 0.05;
  int keep_k = 2;

  void validate() const;
};

struct TriggerDecision {
  bool fire = false;
  TriggerReason reason = TriggerReason::kManual;
};

/// Online checkpoint trigger. Periodic mode fires at every multiple of the
/// period. App-initiated mode fires when the cost metric at the current
/// sample is the minimum of the trailing window; a full window must have
/// been observed (warm-up, which also resolves ties toward the earliest
/// eligible sample) and a refractory interval of period/2 must have elapsed
/// since the last checkpoint.
class TriggerDecider {
 public:
  explicit TriggerDecider(CkptPolicyCfg cfg);

  /// Throws TelemetryError on out-of-order samples.
  TriggerDecision on_sample(const TelemetrySample& sample);

  /// Records a checkpoint taken outside this decider (manual or wall-time
  /// guard) so the refractory interval applies to it too.
  void note_checkpoint(double t);

  std::uint64_t cost_of(const TelemetrySample& sample) const;

 private:
  CkptPolicyCfg cfg_;
  std::deque<std::uint64_t> window_;
  double last_t_;
  double last_fire_t_;
  double next_periodic_t_;
  std::uint64_t samples_seen_ = 0;
};

struct CkptPayload {
  std::vector<std::uint64_t> image_bytes;
  std::uint64_t precious_bytes = 0;

  std::uint64_t total() const;
};

struct DurationEstimate {
  double expected_s = 0;
  double upper_bound_s = 0;
};

/// expected uses the mean congestion factor; upper_bound the configured
/// low percentile (and is never below expected).
DurationEstimate estimate_checkpoint_duration(const CkptPayload& payload,
                                              const BandwidthModel& model, double percentile);

enum class GuardDecision { kWait, kCheckpointNow, kTooLateWarning };

/// Final-checkpoint guard: checkpoint_now once the remaining wall time is
/// within safety_factor of the estimate's upper bound; too_late_warning if
/// even the expected duration no longer fits.
GuardDecision walltime_guard(double elapsed_s, const CkptPolicyCfg& policy,
                             const DurationEstimate& estimate);

}  // namespace genckpt
