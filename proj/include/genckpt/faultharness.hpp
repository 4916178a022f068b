#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "genckpt/store.hpp"

namespace genckpt {

enum class StoreMode { kAtomicCommit, kOverwriteInPlace };
const char* to_string(StoreMode m);

/// One crash site in the checkpoint protocol. Transition points sit between
/// protocol steps; during-write points carry a byte offset inside one
/// payload stream.
struct FaultPoint {
  enum class Kind {
    kAfterQuiesce,
    kDuringPreciousWrite,
    kDuringImageWrite,
    kAfterImageStaged,
    kAtBarrier,
    kBeforeCommitRename,
    kAfterCommitRename,
    kDuringPrune,
  };

  Kind kind = Kind::kAfterQuiesce;
  int process_id = -1;        // during_image_write / after_image_staged
  std::string precious_path;  // during_precious_write
  std::uint64_t offset = 0;   // bytes delivered before the crash
};

std::string to_string(const FaultPoint& p);

struct HarnessConfig {
  /// Image payload per process; the vector length is the process count.
  std::vector<std::uint64_t> image_sizes = {1 << 20, 1 << 20};
  std::vector<std::pair<std::string, std::uint64_t>> precious_files;
  /// Extra during-write points at random byte offsets across the payload.
  int n_random_offsets = 0;
  std::uint64_t seed = 1;
  int keep_k = 1;
  /// Recovery additionally re-hashes every payload of the recovered
  /// generation (slow; meant for spot checks).
  bool verify_digests = false;
};

struct VerdictRecord {
  FaultPoint point;
  StoreMode mode = StoreMode::kAtomicCommit;
  bool recoverable = false;
  std::optional<std::uint64_t> recovered_generation;
  bool mixed_state_detected = false;
  std::string note;
};

struct SweepSummary {
  std::vector<VerdictRecord> records;

  int total() const { return static_cast<int>(records.size()); }
  int recoverable_count() const;
  int unrecoverable_count() const { return total() - recoverable_count(); }
  int mixed_count() const;
};

/// Crash-injection sweep over a simulated filesystem. Each trial clones a
/// template store holding one committed prior generation, drives the write
/// protocol of a new generation into the injected crash, kills the
/// filesystem, and attempts recovery on the survivor.
class FaultHarness {
 public:
  explicit FaultHarness(HarnessConfig cfg);
  ~FaultHarness();

  /// All transition points plus n_random_offsets random-offset points,
  /// deterministic in the config seed.
  std::vector<FaultPoint> enumerate_fault_points() const;

  VerdictRecord run_trial(const FaultPoint& point, StoreMode mode);
  SweepSummary sweep(StoreMode mode);

  int process_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace genckpt
