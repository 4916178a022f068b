#include "genckpt/simworkload.hpp"

#include <algorithm>
#include <cstring>

#include "genckpt/agent.hpp"
#include "genckpt/content.hpp"
#include "genckpt/errors.hpp"

namespace genckpt {

namespace {

constexpr std::uint64_t kDriverHeapBytes = 3ull << 20;
constexpr int kDeleteTick = 5;      // prior-stage temps are unlinked here
constexpr int kTempWriteEvery = 4;  // temp files grow every few ticks

std::vector<std::byte> pack_u64s(std::initializer_list<std::uint64_t> values) {
  std::vector<std::byte> out(values.size() * 8);
  std::size_t i = 0;
  for (auto v : values) {
    std::memcpy(out.data() + i * 8, &v, 8);
    ++i;
  }
  return out;
}

std::uint64_t unpack_u64(const std::vector<std::byte>& buf, std::size_t slot) {
  if (buf.size() < (slot + 1) * 8) throw CorruptImage("meta section too short");
  std::uint64_t v;
  std::memcpy(&v, buf.data() + slot * 8, 8);
  return v;
}

std::uint64_t double_bits(double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  return v;
}

double bits_double(std::uint64_t v) {
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

std::uint64_t WorkloadPreset::worker_peak_bytes() const {
  return static_cast<std::uint64_t>(bases_billions * 1e10 / static_cast<double>(scale_divisor));
}

std::uint64_t WorkloadPreset::temp_bytes_per_stage() const {
  const double total = bases_billions * 7.4e9 / static_cast<double>(scale_divisor);
  return static_cast<std::uint64_t>(total / (workers * pipeline_stages().size()));
}

WorkloadPreset load_preset(const std::string& name) {
  WorkloadPreset p;
  p.name = name;
  if (name == "bog") {
    p.reads_millions = 31.1;
    p.bases_billions = 4.5;
  } else if (name == "spikein") {
    p.reads_millions = 78.7;
    p.bases_billions = 11.8;
  } else if (name == "rhizosphere") {
    p.reads_millions = 193.0;
    p.bases_billions = 28.5;
  } else {
    throw UnknownPreset("no such preset: " + name);
  }
  return p;
}

std::vector<std::string> preset_names() { return {"bog", "spikein", "rhizosphere"}; }

std::vector<PipelineStage> pipeline_stages() {
  return {{"kmer_count", 20}, {"graph_build", 20}, {"simplify", 20}};
}

struct SimJob::Impl {
  SimFs& fs;
  VirtualClock& clock;
  WorkloadConfig cfg;
  std::vector<PipelineStage> stages = pipeline_stages();

  GenerationStore store;
  PreciousTracker tracker;
  TriggerDecider decider;

  // Global pipeline position: all processes advance in lockstep. This is
  // the state a checkpoint captures; it always points at the next tick to
  // execute.
  std::uint64_t stage_idx = 0;
  std::uint64_t tick_in_stage = 0;
  std::uint64_t total_ticks = 0;
  bool complete = false;

  std::vector<std::vector<std::byte>> worker_heap;  // [workers]
  std::vector<std::byte> driver_heap;
  std::vector<std::byte> meta_buf;  // scratch for snapshot views

  std::vector<TelemetrySample> telemetry;
  std::vector<CkptRecord> checkpoints;

  static PreciousPolicy make_policy() {
    PreciousPolicy policy;
    policy.mode = PreciousMode::kPrefixSuffix;
    policy.prefixes = {"tmp_"};
    policy.ckpt_enabled = true;
    return policy;
  }

  Impl(SimFs& fs_in, VirtualClock& clock_in, WorkloadConfig cfg_in)
      : fs(fs_in),
        clock(clock_in),
        cfg(std::move(cfg_in)),
        store(fs, cfg.store_root, clock),
        tracker(fs, make_policy(), cfg.work_dir),
        decider(cfg.policy) {
    if (cfg.attach_bandwidth) fs.attach_bandwidth(&clock, cfg.bandwidth);
    fs.mkdir_all(cfg.work_dir);
    const auto peak = cfg.preset.worker_peak_bytes();
    worker_heap.resize(cfg.preset.workers);
    for (int w = 0; w < cfg.preset.workers; ++w)
      worker_heap[w] = pattern_bytes(worker_seed(w), "heap0", peak / 8);
    driver_heap = pattern_bytes(cfg.preset.seed, "driver", kDriverHeapBytes);
  }

  std::uint64_t worker_seed(int w) const {
    return cfg.preset.seed ^ (static_cast<std::uint64_t>(w + 1) * 0x9e3779b97f4a7c15ull);
  }

  std::string temp_path(std::uint64_t stage, int w) const {
    return cfg.work_dir + "/tmp_" + std::to_string(stage) + "_" + std::to_string(w) + ".bin";
  }

  std::string out_path(std::uint64_t stage, int w) const {
    return cfg.work_dir + "/out_" + stages[stage].label + "_" + std::to_string(w) + ".bin";
  }

  // Heap size ramps from peak/8 at the start of a stage to peak at its end.
  std::uint64_t heap_target(std::uint64_t k) const {
    const auto peak = cfg.preset.worker_peak_bytes();
    const auto len = static_cast<std::uint64_t>(stages[stage_idx].ticks);
    return peak / 8 + (peak - peak / 8) * (k + 1) / len;
  }

  void mutate(std::vector<std::byte>& heap, std::uint64_t seed, std::size_t window) {
    if (heap.size() <= window) return;
    const std::string tag =
        "mut:" + std::to_string(stage_idx) + ":" + std::to_string(tick_in_stage);
    auto patch = pattern_bytes(seed, tag, window);
    const std::size_t offset =
        ((stage_idx * 1315423911ull + tick_in_stage) * 2654435761ull) % (heap.size() - window);
    std::copy(patch.begin(), patch.end(), heap.begin() + static_cast<std::ptrdiff_t>(offset));
  }

  void worker_tick(int w) {
    auto& heap = worker_heap[w];
    const auto k = tick_in_stage;
    const auto len = static_cast<std::uint64_t>(stages[stage_idx].ticks);

    const auto target = heap_target(k);
    if (target < heap.size()) {
      heap.resize(target);
    } else if (target > heap.size()) {
      const std::string tag =
          "grow:" + std::to_string(stage_idx) + ":" + std::to_string(k);
      auto grown = pattern_bytes(worker_seed(w), tag, target - heap.size());
      heap.insert(heap.end(), grown.begin(), grown.end());
    }
    mutate(heap, worker_seed(w), 64 * 1024);

    if (k % kTempWriteEvery == kTempWriteEvery - 1 || k + 1 == len) {
      const auto full = cfg.preset.temp_bytes_per_stage();
      const auto size = std::max<std::uint64_t>(full * (k + 1) / len, 1);
      const std::string tag = "tmp:" + std::to_string(stage_idx);
      fs.write_file(temp_path(stage_idx, w), pattern_bytes(worker_seed(w), tag, size));
    }

    if (stage_idx > 0 && k == kDeleteTick) {
      const auto prev = temp_path(stage_idx - 1, w);
      if (fs.exists(prev)) tracker.intercept_unlink(prev);
    }

    if (k + 1 == len) {
      // Stage output folds the heap and the live temp file, so a restore
      // that loses either produces divergent outputs.
      std::string content = stages[stage_idx].label + "\n" +
                            sha256(std::span<const std::byte>(heap)).hex() + "\n" +
                            fs.digest_file(temp_path(stage_idx, w)).hex() + "\n";
      fs.write_file(out_path(stage_idx, w), content);
    }
  }

  void driver_tick() { mutate(driver_heap, cfg.preset.seed, 4 * 1024); }

  void finish_pipeline() {
    std::string content = "final\n";
    for (std::size_t s = 0; s < stages.size(); ++s)
      for (int w = 0; w < cfg.preset.workers; ++w)
        content += fs.digest_file(out_path(s, w)).hex() + "\n";
    fs.write_file(cfg.work_dir + "/out_final.bin", content);
    complete = true;
  }

  std::uint64_t footprint() const {
    std::uint64_t total = driver_heap.size();
    for (const auto& h : worker_heap) total += h.size();
    return total;
  }

  std::uint64_t precious_visible() {
    std::uint64_t total = 0;
    for (const auto& item : tracker.collect_precious_set()) total += item.byte_size;
    return total;
  }

  std::vector<SectionView> process_sections(int pid) {
    if (pid == 0) {
      meta_buf = pack_u64s({stage_idx, tick_in_stage, total_ticks,
                            complete ? 1ull : 0ull, double_bits(clock.now())});
      return {{"meta", SectionKind::kMetadata, meta_buf},
              {"heap", SectionKind::kHeapModel, driver_heap}};
    }
    meta_buf = pack_u64s({static_cast<std::uint64_t>(pid), stage_idx, tick_in_stage});
    return {{"meta", SectionKind::kMetadata, meta_buf},
            {"heap", SectionKind::kHeapModel, worker_heap[pid - 1]}};
  }

  CkptRecord checkpoint_now() {
    const int process_count = cfg.preset.workers + 1;
    auto staging = store.begin_generation(store.next_id(), process_count);

    CkptRecord rec;
    rec.generation_index = staging.index();
    rec.t = clock.now();

    const double t0 = clock.now();
    for (const auto& r : tracker.stage_all(staging)) rec.precious_bytes += r.byte_size;
    rec.precious_seconds = clock.now() - t0;

    const double t1 = clock.now();
    for (int pid = 0; pid < process_count; ++pid) {
      auto image = snapshot_state(process_sections(pid));
      SpanSource source(image);
      rec.image_bytes += staging.stage_image(pid, source).byte_size;
    }
    rec.image_seconds = clock.now() - t1;

    staging.commit();
    store.prune(cfg.policy.keep_k);
    decider.note_checkpoint(clock.now());
    checkpoints.push_back(rec);
    return rec;
  }

  bool tick() {
    if (complete) return false;
    clock.advance(cfg.tick_s);

    for (int w = 0; w < cfg.preset.workers; ++w) worker_tick(w);
    driver_tick();

    ++total_ticks;
    ++tick_in_stage;
    if (tick_in_stage >= static_cast<std::uint64_t>(stages[stage_idx].ticks)) {
      tick_in_stage = 0;
      ++stage_idx;
      if (stage_idx >= stages.size()) finish_pipeline();
    }

    TelemetrySample sample{clock.now(), footprint(), precious_visible(),
                           complete ? "done" : stages[stage_idx].label};
    telemetry.push_back(sample);
    if (!complete && decider.on_sample(sample).fire) checkpoint_now();
    return !complete;
  }

  void restore_latest() {
    auto latest = store.latest_committed();
    if (!latest) throw NotFound("no committed generation to restore");
    auto manifest = store.load_manifest(latest->index);
    if (manifest.process_count != cfg.preset.workers + 1)
      throw RestoreRefused("manifest process count " + std::to_string(manifest.process_count) +
                           " does not match preset");

    restore_precious(fs, store, manifest);

    auto driver = restore_state(store.read_image(manifest, 0));
    for (auto& section : driver) {
      if (section.name == "meta") {
        stage_idx = unpack_u64(section.bytes, 0);
        tick_in_stage = unpack_u64(section.bytes, 1);
        total_ticks = unpack_u64(section.bytes, 2);
        complete = unpack_u64(section.bytes, 3) != 0;
        clock.set(bits_double(unpack_u64(section.bytes, 4)));
      } else if (section.name == "heap") {
        driver_heap = std::move(section.bytes);
      }
    }
    for (int pid = 1; pid <= cfg.preset.workers; ++pid) {
      auto sections = restore_state(store.read_image(manifest, pid));
      for (auto& section : sections)
        if (section.name == "heap") worker_heap[pid - 1] = std::move(section.bytes);
    }
    tracker.reset_after_restore();
    decider.note_checkpoint(clock.now());
  }

  WorkloadResult result() const {
    WorkloadResult r;
    r.completed = complete;
    r.ticks = total_ticks;
    r.telemetry = telemetry;
    r.checkpoints = checkpoints;
    if (fs.is_dir(cfg.work_dir)) {
      for (const auto& name : fs.list_dir(cfg.work_dir)) {
        if (name.rfind("out_", 0) != 0) continue;
        const std::string path = cfg.work_dir + "/" + name;
        r.outputs[path] = fs.digest_file(path);
      }
    }
    return r;
  }
};

SimJob::SimJob(SimFs& fs, VirtualClock& clock, WorkloadConfig cfg)
    : impl_(std::make_unique<Impl>(fs, clock, std::move(cfg))) {}

SimJob::~SimJob() = default;

bool SimJob::tick() { return impl_->tick(); }

void SimJob::run(std::uint64_t max_ticks) {
  for (std::uint64_t i = 0; i < max_ticks; ++i)
    if (!impl_->tick()) return;
}

bool SimJob::run_until_checkpoint(int n) {
  for (;;) {
    if (static_cast<int>(impl_->checkpoints.size()) >= n) return true;
    if (!impl_->tick()) return static_cast<int>(impl_->checkpoints.size()) >= n;
  }
}

CkptRecord SimJob::checkpoint_now() { return impl_->checkpoint_now(); }

void SimJob::restore_latest() { impl_->restore_latest(); }

bool SimJob::completed() const { return impl_->complete; }

int SimJob::checkpoints_committed() const { return static_cast<int>(impl_->checkpoints.size()); }

WorkloadResult SimJob::result() const { return impl_->result(); }

}  // namespace genckpt
