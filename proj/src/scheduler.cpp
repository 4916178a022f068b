#include "genckpt/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "genckpt/errors.hpp"

namespace genckpt {

std::string telemetry_to_csv(const std::vector<TelemetrySample>& samples) {
  std::ostringstream out;
  out << "t,footprint_bytes,precious_bytes,stage_label\n";
  for (const auto& s : samples)
    out << s.t << "," << s.footprint_bytes << "," << s.precious_bytes << "," << s.stage_label
        << "\n";
  return out.str();
}

std::vector<TelemetrySample> telemetry_from_csv(const std::string& csv) {
  std::vector<TelemetrySample> out;
  std::istringstream in(csv);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {  // header
      first = false;
      continue;
    }
    if (line.empty()) continue;
    TelemetrySample s;
    std::istringstream fields(line);
    std::string f;
    std::getline(fields, f, ',');
    s.t = std::stod(f);
    std::getline(fields, f, ',');
    s.footprint_bytes = std::stoull(f);
    std::getline(fields, f, ',');
    s.precious_bytes = std::stoull(f);
    std::getline(fields, s.stage_label);
    out.push_back(std::move(s));
  }
  return out;
}

const char* to_string(TriggerReason r) {
  switch (r) {
    case TriggerReason::kPeriodic: return "periodic";
    case TriggerReason::kAppInitiated: return "app_initiated";
    case TriggerReason::kWalltimeGuard: return "walltime_guard";
    case TriggerReason::kManual: return "manual";
  }
  return "unknown";
}

void CkptPolicyCfg::validate() const {
  if ((mode == PolicyMode::kPeriodic || mode == PolicyMode::kCombined) && !(period_s > 0))
    throw TelemetryError("period must be positive in periodic/combined mode");
  if (safety_factor < 1.0) throw TelemetryError("safety_factor must be >= 1");
  if (window < 1) throw TelemetryError("window must be >= 1");
  if (!(walltime_limit_s > 0)) throw TelemetryError("walltime_limit must be positive");
  if (congestion_percentile < 0 || congestion_percentile > 1)
    throw TelemetryError("congestion_percentile must be in [0, 1]");
  if (keep_k < 1) throw TelemetryError("keep_k must be >= 1");
}

TriggerDecider::TriggerDecider(CkptPolicyCfg cfg)
    : cfg_(cfg),
      last_t_(-std::numeric_limits<double>::infinity()),
      last_fire_t_(-std::numeric_limits<double>::infinity()),
      next_periodic_t_(cfg.period_s) {
  cfg_.validate();
}

std::uint64_t TriggerDecider::cost_of(const TelemetrySample& s) const {
  switch (cfg_.cost_metric) {
    case CostMetric::kSum: return s.footprint_bytes + s.precious_bytes;
    case CostMetric::kFootprintOnly: return s.footprint_bytes;
    case CostMetric::kPreciousOnly: return s.precious_bytes;
  }
  return 0;
}

void TriggerDecider::note_checkpoint(double t) { last_fire_t_ = std::max(last_fire_t_, t); }

TriggerDecision TriggerDecider::on_sample(const TelemetrySample& sample) {
  if (sample.t <= last_t_)
    throw TelemetryError("out-of-order telemetry sample at t=" + std::to_string(sample.t));
  last_t_ = sample.t;
  ++samples_seen_;

  const std::uint64_t cost = cost_of(sample);
  window_.push_back(cost);
  while (window_.size() > static_cast<std::size_t>(cfg_.window)) window_.pop_front();

  if (cfg_.mode == PolicyMode::kPeriodic || cfg_.mode == PolicyMode::kCombined) {
    if (sample.t >= next_periodic_t_) {
      next_periodic_t_ = (std::floor(sample.t / cfg_.period_s) + 1.0) * cfg_.period_s;
      last_fire_t_ = sample.t;
      return {true, TriggerReason::kPeriodic};
    }
  }

  if (cfg_.mode == PolicyMode::kAppInitiated || cfg_.mode == PolicyMode::kCombined) {
    const double refractory = cfg_.period_s > 0 ? cfg_.period_s / 2.0 : 0.0;
    const bool window_full = samples_seen_ >= static_cast<std::uint64_t>(cfg_.window);
    const bool is_min = cost == *std::min_element(window_.begin(), window_.end());
    if (window_full && is_min && sample.t - last_fire_t_ >= refractory) {
      last_fire_t_ = sample.t;
      return {true, TriggerReason::kAppInitiated};
    }
  }

  return {false, TriggerReason::kManual};
}

std::uint64_t CkptPayload::total() const {
  return std::accumulate(image_bytes.begin(), image_bytes.end(), precious_bytes);
}

DurationEstimate estimate_checkpoint_duration(const CkptPayload& payload,
                                              const BandwidthModel& model, double percentile) {
  if (!(model.base_rate_bytes_per_s > 0)) throw ModelError("base rate must be positive");
  const auto total = static_cast<double>(payload.total());
  if (total == 0) return {0.0, 0.0};
  DurationEstimate e;
  e.expected_s = total / (model.base_rate_bytes_per_s * model.congestion.mean());
  e.upper_bound_s = total / (model.base_rate_bytes_per_s * model.congestion.percentile(percentile));
  e.upper_bound_s = std::max(e.upper_bound_s, e.expected_s);
  return e;
}

GuardDecision walltime_guard(double elapsed_s, const CkptPolicyCfg& policy,
                             const DurationEstimate& estimate) {
  const double remaining = policy.walltime_limit_s - elapsed_s;
  if (remaining < estimate.expected_s) return GuardDecision::kTooLateWarning;
  if (remaining <= policy.safety_factor * estimate.upper_bound_s)
    return GuardDecision::kCheckpointNow;
  return GuardDecision::kWait;
}

}  // namespace genckpt
