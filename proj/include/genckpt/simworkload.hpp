#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "genckpt/precious.hpp"
#include "genckpt/scheduler.hpp"
#include "genckpt/store.hpp"

namespace genckpt {

/// Synthetic assembly-style pipeline sized after real metagenome datasets,
/// scaled down by `scale_divisor` so runs fit in memory.
struct WorkloadPreset {
  std::string name;
  double reads_millions = 0;
  double bases_billions = 0;
  int workers = 2;
  std::uint64_t scale_divisor = 1000;
  std::uint64_t seed = 1;

  /// Peak per-worker heap footprint in bytes at the chosen scale.
  std::uint64_t worker_peak_bytes() const;
  /// Total temp-file volume per worker per stage at the chosen scale.
  std::uint64_t temp_bytes_per_stage() const;
};

/// Known presets: "bog", "spikein", "rhizosphere". Throws UnknownPreset.
WorkloadPreset load_preset(const std::string& name);
std::vector<std::string> preset_names();

struct PipelineStage {
  std::string label;
  int ticks = 0;
};

/// The three stages every run passes through, in order.
std::vector<PipelineStage> pipeline_stages();

struct WorkloadConfig {
  WorkloadPreset preset;
  CkptPolicyCfg policy;
  double tick_s = 60.0;
  std::string work_dir = "work";
  std::string store_root = "store";
  bool attach_bandwidth = true;
  BandwidthModel bandwidth;
};

struct CkptRecord {
  std::uint64_t generation_index = 0;
  double t = 0;
  std::uint64_t image_bytes = 0;
  double image_seconds = 0;
  std::uint64_t precious_bytes = 0;
  double precious_seconds = 0;
};

struct WorkloadResult {
  bool completed = false;
  std::uint64_t ticks = 0;
  std::map<std::string, Digest> outputs;  // path -> digest of final outputs
  std::vector<TelemetrySample> telemetry;
  std::vector<CkptRecord> checkpoints;
};

/// One simulated job instance over a SimFs. Deterministic: everything a
/// tick does depends only on (preset seed, stage, tick, worker), so
/// re-executing ticks after a restore converges on the same outputs.
class SimJob {
 public:
  SimJob(SimFs& fs, VirtualClock& clock, WorkloadConfig cfg);
  ~SimJob();

  /// Executes one tick; returns false once the pipeline has completed.
  bool tick();

  /// Runs to completion (or until max_ticks).
  void run(std::uint64_t max_ticks = UINT64_MAX);

  /// Runs until the n-th checkpoint of this instance has committed.
  /// Returns false if the pipeline completed first.
  bool run_until_checkpoint(int n);

  /// Forces a checkpoint now regardless of policy.
  CkptRecord checkpoint_now();

  /// Rebuilds application state from the newest committed generation.
  /// Call on a freshly constructed job over a recovered filesystem.
  void restore_latest();

  bool completed() const;
  int checkpoints_committed() const;
  WorkloadResult result() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace genckpt
