#include "genckpt/faultharness.hpp"

#include <algorithm>
#include <random>

#include "genckpt/content.hpp"
#include "genckpt/errors.hpp"

namespace genckpt {

namespace {

constexpr const char* kStoreRoot = "ckpt";

}  // namespace

const char* to_string(StoreMode m) {
  return m == StoreMode::kAtomicCommit ? "atomic_commit" : "overwrite_in_place";
}

std::string to_string(const FaultPoint& p) {
  switch (p.kind) {
    case FaultPoint::Kind::kAfterQuiesce:
      return "after_quiesce";
    case FaultPoint::Kind::kDuringPreciousWrite:
      return "during_precious_write(" + p.precious_path + "@" + std::to_string(p.offset) + ")";
    case FaultPoint::Kind::kDuringImageWrite:
      return "during_image_write(p" + std::to_string(p.process_id) + "@" +
             std::to_string(p.offset) + ")";
    case FaultPoint::Kind::kAfterImageStaged:
      return "after_image_staged(p" + std::to_string(p.process_id) + ")";
    case FaultPoint::Kind::kAtBarrier:
      return "at_barrier";
    case FaultPoint::Kind::kBeforeCommitRename:
      return "before_commit_rename";
    case FaultPoint::Kind::kAfterCommitRename:
      return "after_commit_rename";
    case FaultPoint::Kind::kDuringPrune:
      return "during_prune";
  }
  return "unknown";
}

int SweepSummary::recoverable_count() const {
  return static_cast<int>(
      std::count_if(records.begin(), records.end(), [](const auto& r) { return r.recoverable; }));
}

int SweepSummary::mixed_count() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(),
                                        [](const auto& r) { return r.mixed_state_detected; }));
}

struct FaultHarness::Impl {
  HarnessConfig cfg;
  int m;

  std::vector<std::vector<std::byte>> image_content;
  std::vector<Digest> image_digest;
  std::vector<std::vector<std::byte>> precious_content;
  std::vector<Digest> precious_digest;

  std::unique_ptr<SimFs> atomic_template;
  std::unique_ptr<SimFs> overwrite_template;
  VirtualClock template_clock;

  explicit Impl(HarnessConfig cfg_in) : cfg(std::move(cfg_in)) {
    if (cfg.image_sizes.empty()) throw HarnessError("at least one process image required");
    m = static_cast<int>(cfg.image_sizes.size());

    for (int pid = 0; pid < m; ++pid) {
      image_content.push_back(
          pattern_bytes(cfg.seed, "img:" + std::to_string(pid), cfg.image_sizes[pid]));
      image_digest.push_back(sha256(image_content.back()));
    }
    for (const auto& [path, size] : cfg.precious_files) {
      precious_content.push_back(pattern_bytes(cfg.seed, "pf:" + path, size));
      precious_digest.push_back(sha256(precious_content.back()));
    }

    build_atomic_template();
    build_overwrite_template();
  }

  // Prior-generation payloads differ from the new generation's so recovery
  // to the old instance is distinguishable from a half-written new one.
  std::vector<std::byte> prior_image(int pid) const {
    return pattern_bytes(cfg.seed, "prior_img:" + std::to_string(pid), cfg.image_sizes[pid]);
  }

  void build_atomic_template() {
    atomic_template = std::make_unique<SimFs>();
    GenerationStore store(*atomic_template, kStoreRoot, template_clock);
    auto staging = store.begin_generation(store.next_id(), m);
    for (std::size_t i = 0; i < precious_content.size(); ++i) {
      auto prior = pattern_bytes(cfg.seed, "prior_pf:" + cfg.precious_files[i].first,
                                 cfg.precious_files[i].second);
      SpanSource src(prior, sha256(prior));
      staging.stage_precious(cfg.precious_files[i].first, Lifecycle::kLive, src);
    }
    for (int pid = 0; pid < m; ++pid) {
      auto prior = prior_image(pid);
      SpanSource src(prior, sha256(prior));
      staging.stage_image(pid, src);
    }
    staging.commit();
  }

  void build_overwrite_template() {
    overwrite_template = std::make_unique<SimFs>();
    OverwriteStore store(*overwrite_template, kStoreRoot);
    for (std::size_t i = 0; i < precious_content.size(); ++i) {
      auto prior = pattern_bytes(cfg.seed, "prior_pf:" + cfg.precious_files[i].first,
                                 cfg.precious_files[i].second);
      SpanSource src(prior);
      store.write_precious(cfg.precious_files[i].first, 0, src);
    }
    for (int pid = 0; pid < m; ++pid) {
      auto prior = prior_image(pid);
      SpanSource src(prior);
      store.write_image(pid, 0, src);
    }
  }

  std::vector<FaultPoint> enumerate_points() const {
    std::vector<FaultPoint> points;
    points.push_back({FaultPoint::Kind::kAfterQuiesce, -1, "", 0});
    for (std::size_t i = 0; i < cfg.precious_files.size(); ++i)
      points.push_back({FaultPoint::Kind::kDuringPreciousWrite, -1, cfg.precious_files[i].first,
                        cfg.precious_files[i].second});
    for (int pid = 0; pid < m; ++pid)
      points.push_back({FaultPoint::Kind::kAfterImageStaged, pid, "", 0});
    points.push_back({FaultPoint::Kind::kAtBarrier, -1, "", 0});
    points.push_back({FaultPoint::Kind::kBeforeCommitRename, -1, "", 0});
    points.push_back({FaultPoint::Kind::kAfterCommitRename, -1, "", 0});
    points.push_back({FaultPoint::Kind::kDuringPrune, -1, "", 0});

    // Random byte offsets over the concatenated payload stream, in staging
    // order (precious files first, then images).
    std::uint64_t total = 0;
    for (const auto& [path, size] : cfg.precious_files) total += size;
    for (auto size : cfg.image_sizes) total += size;
    std::mt19937_64 rng(cfg.seed * 0x2545f4914f6cdd1dull + 1);
    for (int i = 0; i < cfg.n_random_offsets && total > 0; ++i) {
      std::uint64_t pos = rng() % total;
      FaultPoint p;
      bool placed = false;
      for (const auto& [path, size] : cfg.precious_files) {
        if (pos < size) {
          p.kind = FaultPoint::Kind::kDuringPreciousWrite;
          p.precious_path = path;
          p.offset = pos;
          placed = true;
          break;
        }
        pos -= size;
      }
      if (!placed) {
        for (int pid = 0; pid < m; ++pid) {
          if (pos < cfg.image_sizes[pid]) {
            p.kind = FaultPoint::Kind::kDuringImageWrite;
            p.process_id = pid;
            p.offset = pos;
            break;
          }
          pos -= cfg.image_sizes[pid];
        }
      }
      points.push_back(p);
    }
    return points;
  }

  VerdictRecord run_atomic(const FaultPoint& point) {
    auto fs = atomic_template->clone();
    VirtualClock clock;
    clock.set(1000.0);

    StoreOptions opts;
    const char* trace_target = nullptr;
    switch (point.kind) {
      case FaultPoint::Kind::kBeforeCommitRename:
        trace_target = "commit.before_rename";
        break;
      case FaultPoint::Kind::kAfterCommitRename:
        trace_target = "commit.after_rename";
        break;
      case FaultPoint::Kind::kDuringPrune:
        trace_target = "prune.before_manifest_delete";
        break;
      default:
        break;
    }
    if (trace_target)
      opts.trace_hook = [trace_target](std::string_view p) {
        if (p == trace_target) throw InjectedCrash(std::string(trace_target));
      };

    bool crashed = false;
    {
      GenerationStore store(*fs, kStoreRoot, clock, opts);
      try {
        auto staging = store.begin_generation(store.next_id(), m);
        if (point.kind == FaultPoint::Kind::kAfterQuiesce) throw InjectedCrash("after_quiesce");

        for (std::size_t i = 0; i < precious_content.size(); ++i) {
          const auto& path = cfg.precious_files[i].first;
          SpanSource src(precious_content[i], precious_digest[i]);
          if (point.kind == FaultPoint::Kind::kDuringPreciousWrite &&
              point.precious_path == path) {
            CrashAtOffsetSource crashing(src, point.offset, to_string(point));
            staging.stage_precious(path, Lifecycle::kLive, crashing);
          } else {
            staging.stage_precious(path, Lifecycle::kLive, src);
          }
        }

        for (int pid = 0; pid < m; ++pid) {
          SpanSource src(image_content[pid], image_digest[pid]);
          if (point.kind == FaultPoint::Kind::kDuringImageWrite && point.process_id == pid) {
            CrashAtOffsetSource crashing(src, point.offset, to_string(point));
            staging.stage_image(pid, crashing);
          } else {
            staging.stage_image(pid, src);
          }
          if (point.kind == FaultPoint::Kind::kAfterImageStaged && point.process_id == pid)
            throw InjectedCrash(to_string(point));
        }

        if (point.kind == FaultPoint::Kind::kAtBarrier) throw InjectedCrash("at_barrier");

        staging.commit();
        store.prune(cfg.keep_k);
      } catch (const InjectedCrash&) {
        crashed = true;
      }
    }
    if (!crashed) throw HarnessError("fault point never fired: " + to_string(point));

    auto survivor = fs->crash_kill();
    VirtualClock rec_clock;
    StoreOptions rec_opts;
    rec_opts.verify_digests_on_scan = cfg.verify_digests;
    GenerationStore recovery(*survivor, kStoreRoot, rec_clock, rec_opts);
    recovery.discard_staging();

    VerdictRecord v;
    v.point = point;
    v.mode = StoreMode::kAtomicCommit;
    std::vector<ValidationWarning> warnings;
    auto latest = recovery.latest_committed(&warnings);
    v.recoverable = latest.has_value();
    if (latest) {
      v.recovered_generation = latest->index;
      if (cfg.verify_digests) {
        auto manifest = recovery.load_manifest(latest->index);
        for (const auto& img : manifest.images) recovery.read_image(manifest, img.process_id);
        for (const auto& rec : manifest.precious) recovery.read_precious(manifest, rec);
      }
    }
    for (const auto& w : warnings)
      v.note += "gen " + std::to_string(w.index) + ": " + w.message + "; ";
    return v;
  }

  VerdictRecord run_overwrite(const FaultPoint& point) {
    auto fs = overwrite_template->clone();
    {
      OverwriteStore store(*fs, kStoreRoot);
      try {
        if (point.kind == FaultPoint::Kind::kAfterQuiesce) throw InjectedCrash("after_quiesce");

        for (std::size_t i = 0; i < precious_content.size(); ++i) {
          const auto& path = cfg.precious_files[i].first;
          SpanSource src(precious_content[i]);
          if (point.kind == FaultPoint::Kind::kDuringPreciousWrite &&
              point.precious_path == path) {
            CrashAtOffsetSource crashing(src, point.offset, to_string(point));
            store.write_precious(path, 1, crashing);
          } else {
            store.write_precious(path, 1, src);
          }
        }

        for (int pid = 0; pid < m; ++pid) {
          SpanSource src(image_content[pid]);
          if (point.kind == FaultPoint::Kind::kDuringImageWrite && point.process_id == pid) {
            CrashAtOffsetSource crashing(src, point.offset, to_string(point));
            store.write_image(pid, 1, crashing);
          } else {
            store.write_image(pid, 1, src);
          }
          if (point.kind == FaultPoint::Kind::kAfterImageStaged && point.process_id == pid)
            throw InjectedCrash(to_string(point));
        }
        // barrier/commit/prune have no equivalent here: the last slot write
        // already published the new generation in place
      } catch (const InjectedCrash&) {
      }
    }

    auto survivor = fs->crash_kill();
    OverwriteStore recovery(*survivor, kStoreRoot);
    auto scan = recovery.scan(m);

    VerdictRecord v;
    v.point = point;
    v.mode = StoreMode::kOverwriteInPlace;
    v.recoverable = scan.restorable;
    v.recovered_generation = scan.generation;
    v.mixed_state_detected = scan.mixed_state;
    for (const auto& n : scan.notes) v.note += n + "; ";
    return v;
  }
};

FaultHarness::FaultHarness(HarnessConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

FaultHarness::~FaultHarness() = default;

std::vector<FaultPoint> FaultHarness::enumerate_fault_points() const {
  return impl_->enumerate_points();
}

VerdictRecord FaultHarness::run_trial(const FaultPoint& point, StoreMode mode) {
  return mode == StoreMode::kAtomicCommit ? impl_->run_atomic(point)
                                          : impl_->run_overwrite(point);
}

SweepSummary FaultHarness::sweep(StoreMode mode) {
  SweepSummary summary;
  for (const auto& point : impl_->enumerate_points())
    summary.records.push_back(run_trial(point, mode));
  return summary;
}

int FaultHarness::process_count() const { return impl_->m; }

}  // namespace genckpt
