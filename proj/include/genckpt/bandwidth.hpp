#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace genckpt {

/// Multiplicative degradation of shared-filesystem bandwidth. Factors are
/// in (0, 1]; 1.0 means the file system delivers its base rate.
class CongestionModel {
 public:
  static CongestionModel constant(double factor);
  /// min(1, exp(N(mu, sigma))) refreshed every `interval` seconds.
  static CongestionModel log_normal(double mu, double sigma, std::uint64_t seed,
                                    double interval_s = 60.0);
  static CongestionModel trace(std::vector<double> factors, double interval_s = 60.0);

  double factor_at(double t) const;
  double mean() const;
  double percentile(double q) const;
  /// One independent draw, for simulating the congestion realized by a run.
  double sample(std::mt19937_64& rng) const;

 private:
  CongestionModel() = default;
  void build_empirical();

  enum class Kind { kConstant, kLogNormal, kTrace } kind_ = Kind::kConstant;
  double constant_ = 1.0;
  double mu_ = 0.0, sigma_ = 0.0;
  std::uint64_t seed_ = 0;
  double interval_s_ = 60.0;
  std::vector<double> trace_;
  std::vector<double> sorted_samples_;  // empirical basis for mean/percentile
  double mean_ = 1.0;
};

/// Shared-filesystem throughput model: base rate degraded by congestion.
struct BandwidthModel {
  double base_rate_bytes_per_s = 1.5e9;
  CongestionModel congestion = CongestionModel::constant(1.0);

  double effective_rate(double t) const;
  /// Seconds to write `bytes` starting at time `t`, at the rate in effect then.
  double write_duration(std::uint64_t bytes, double t) const;
};

}  // namespace genckpt
