#include "genckpt/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genckpt/errors.hpp"

namespace genckpt {

CongestionModel CongestionModel::constant(double factor) {
  if (!(factor > 0.0) || factor > 1.0) throw ModelError("congestion factor must be in (0, 1]");
  CongestionModel m;
  m.kind_ = Kind::kConstant;
  m.constant_ = factor;
  m.mean_ = factor;
  return m;
}

CongestionModel CongestionModel::log_normal(double mu, double sigma, std::uint64_t seed,
                                            double interval_s) {
  if (sigma < 0.0 || interval_s <= 0.0) throw ModelError("bad log-normal parameters");
  CongestionModel m;
  m.kind_ = Kind::kLogNormal;
  m.mu_ = mu;
  m.sigma_ = sigma;
  m.seed_ = seed;
  m.interval_s_ = interval_s;
  m.build_empirical();
  return m;
}

CongestionModel CongestionModel::trace(std::vector<double> factors, double interval_s) {
  if (factors.empty()) throw ModelError("congestion trace is empty");
  for (double f : factors)
    if (!(f > 0.0) || f > 1.0) throw ModelError("trace factor outside (0, 1]");
  CongestionModel m;
  m.kind_ = Kind::kTrace;
  m.trace_ = std::move(factors);
  m.interval_s_ = interval_s;
  m.sorted_samples_ = m.trace_;
  std::sort(m.sorted_samples_.begin(), m.sorted_samples_.end());
  m.mean_ = std::accumulate(m.sorted_samples_.begin(), m.sorted_samples_.end(), 0.0) /
            static_cast<double>(m.sorted_samples_.size());
  return m;
}

namespace {
double draw_log_normal(double mu, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(mu, sigma);
  return std::min(1.0, std::exp(n(rng)));
}
}  // namespace

void CongestionModel::build_empirical() {
  constexpr std::size_t kSamples = 8192;
  std::mt19937_64 rng(seed_ ^ 0x9e3779b97f4a7c15ull);
  sorted_samples_.resize(kSamples);
  for (auto& s : sorted_samples_) s = draw_log_normal(mu_, sigma_, rng);
  std::sort(sorted_samples_.begin(), sorted_samples_.end());
  mean_ = std::accumulate(sorted_samples_.begin(), sorted_samples_.end(), 0.0) /
          static_cast<double>(kSamples);
}

double CongestionModel::factor_at(double t) const {
  switch (kind_) {
    case Kind::kConstant:
      return constant_;
    case Kind::kTrace: {
      auto idx = static_cast<std::size_t>(std::max(0.0, t) / interval_s_);
      return trace_[std::min(idx, trace_.size() - 1)];
    }
    case Kind::kLogNormal: {
      auto bucket = static_cast<std::uint64_t>(std::max(0.0, t) / interval_s_);
      std::mt19937_64 rng(seed_ ^ (bucket * 0xbf58476d1ce4e5b9ull + 1));
      return draw_log_normal(mu_, sigma_, rng);
    }
  }
  return 1.0;
}

double CongestionModel::mean() const { return mean_; }

double CongestionModel::percentile(double q) const {
  if (q < 0.0 || q > 1.0) throw ModelError("percentile must be in [0, 1]");
  if (kind_ == Kind::kConstant) return constant_;
  const auto& s = sorted_samples_;
  auto idx = static_cast<std::size_t>(q * static_cast<double>(s.size() - 1));
  return s[idx];
}

double CongestionModel::sample(std::mt19937_64& rng) const {
  switch (kind_) {
    case Kind::kConstant:
      return constant_;
    case Kind::kLogNormal:
      return draw_log_normal(mu_, sigma_, rng);
    case Kind::kTrace: {
      std::uniform_int_distribution<std::size_t> pick(0, trace_.size() - 1);
      return trace_[pick(rng)];
    }
  }
  return 1.0;
}

double BandwidthModel::effective_rate(double t) const {
  if (!(base_rate_bytes_per_s > 0.0)) throw ModelError("base rate must be positive");
  return base_rate_bytes_per_s * congestion.factor_at(t);
}

double BandwidthModel::write_duration(std::uint64_t bytes, double t) const {
  if (bytes == 0) return 0.0;
  return static_cast<double>(bytes) / effective_rate(t);
}

}  // namespace genckpt
