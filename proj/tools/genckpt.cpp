#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "genckpt/coordinator.hpp"
#include "genckpt/errors.hpp"
#include "genckpt/faultharness.hpp"
#include "genckpt/report.hpp"
#include "genckpt/simworkload.hpp"

using namespace genckpt;

namespace {

std::string resolve_store(std::string from_flag) {
  if (!from_flag.empty()) return from_flag;
  if (const char* env = std::getenv("GENCKPT_STORE"); env && *env) return env;
  throw Error("no store given: pass --store or set GENCKPT_STORE");
}

std::vector<ReportRow> rows_from_checkpoints(const std::vector<CkptRecord>& ckpts) {
  std::vector<ReportRow> rows;
  for (const auto& c : ckpts)
    rows.push_back({c.generation_index, c.precious_seconds, c.image_seconds, c.precious_bytes,
                    c.image_bytes});
  return rows;
}

WorkloadConfig build_workload(const std::string& preset, std::uint64_t divisor,
                              std::uint64_t seed, const std::string& policy, double period,
                              int window, int keep_k) {
  WorkloadConfig cfg;
  cfg.preset = load_preset(preset);
  cfg.preset.scale_divisor = divisor;
  cfg.preset.seed = seed;
  if (policy == "periodic")
    cfg.policy.mode = PolicyMode::kPeriodic;
  else if (policy == "app")
    cfg.policy.mode = PolicyMode::kAppInitiated;
  else if (policy == "combined")
    cfg.policy.mode = PolicyMode::kCombined;
  else
    throw Error("unknown policy: " + policy);
  cfg.policy.period_s = period;
  cfg.policy.window = window;
  cfg.policy.keep_k = keep_k;
  return cfg;
}

int cmd_run(const WorkloadConfig& cfg, bool csv) {
  SimFs fs;
  VirtualClock clock;
  SimJob job(fs, clock, cfg);
  job.run();
  auto result = job.result();
  if (csv) {
    std::cout << render_report_csv(rows_from_checkpoints(result.checkpoints));
    return 0;
  }
  std::cout << "preset " << cfg.preset.name << ", " << result.ticks << " ticks, "
            << result.checkpoints.size() << " checkpoints, " << result.outputs.size()
            << " outputs\n";
  std::cout << render_report_table(rows_from_checkpoints(result.checkpoints));
  return 0;
}

int cmd_bench(WorkloadConfig cfg, const std::string& congestion, double mu, double sigma,
              double base_rate, std::uint64_t seed, bool csv) {
  cfg.bandwidth.base_rate_bytes_per_s = base_rate;
  if (congestion == "constant")
    cfg.bandwidth.congestion = CongestionModel::constant(1.0);
  else if (congestion == "lognormal")
    cfg.bandwidth.congestion = CongestionModel::log_normal(mu, sigma, seed);
  else
    throw Error("unknown congestion model: " + congestion);

  SimFs fs;
  VirtualClock clock;
  SimJob job(fs, clock, cfg);
  job.run();
  auto result = job.result();
  auto rows = rows_from_checkpoints(result.checkpoints);
  if (csv) {
    std::cout << render_report_csv(rows);
    return 0;
  }
  std::cout << render_report_table(rows);
  double total = 0;
  for (const auto& r : rows) total += r.precious_seconds + r.image_seconds;
  std::cout << "total checkpoint time " << total << " s over " << rows.size()
            << " checkpoints\n";
  return 0;
}

int cmd_checkpoint(const std::string& store_root, const std::vector<std::string>& images,
                   const std::vector<std::string>& precious) {
  RealFs fs;
  SystemClock clock;
  GenerationStore store(fs, store_root, clock);
  const int process_count = images.empty() ? 1 : static_cast<int>(images.size());
  auto staging = store.begin_generation(store.next_id(), process_count);

  for (const auto& path : precious) {
    FsFileSource src(fs, path);
    staging.stage_precious(path, Lifecycle::kLive, src);
  }
  if (images.empty()) {
    std::vector<std::byte> empty;
    SpanSource src(empty);
    staging.stage_image(0, src);
  } else {
    for (std::size_t pid = 0; pid < images.size(); ++pid) {
      FsFileSource src(fs, images[pid]);
      staging.stage_image(static_cast<int>(pid), src);
    }
  }
  auto manifest = staging.commit();
  std::cout << "committed generation " << manifest.generation.index << " ("
            << human_bytes(manifest.total_bytes) << ", " << manifest.images.size()
            << " images, " << manifest.precious.size() << " precious files)\n";
  return 0;
}

int cmd_restore(const std::string& store_root, std::int64_t gen, const std::string& out_dir) {
  RealFs fs;
  SystemClock clock;
  GenerationStore store(fs, store_root, clock);
  std::uint64_t index;
  if (gen >= 0) {
    index = static_cast<std::uint64_t>(gen);
  } else {
    auto latest = store.latest_committed();
    if (!latest) throw NotFound("store has no committed generation");
    index = latest->index;
  }
  auto manifest = store.load_manifest(index);

  auto outcome = restore_precious(fs, store, manifest);
  fs.mkdir_all(out_dir);
  for (const auto& img : manifest.images) {
    auto bytes = store.read_image(manifest, img.process_id);
    fs.write_file(out_dir + "/image_" + std::to_string(img.process_id) + ".img", bytes);
  }
  std::cout << "restored generation " << index << ": " << outcome.restored.size()
            << " precious files, " << manifest.images.size() << " images into " << out_dir
            << "\n";
  for (const auto& p : outcome.overwritten)
    std::cout << "overwrote diverged file: " << p << "\n";
  return 0;
}

int cmd_inspect(const std::string& store_root) {
  RealFs fs;
  SystemClock clock;
  GenerationStore store(fs, store_root, clock);
  std::vector<ValidationWarning> warnings;
  auto gens = store.committed_generations(&warnings);
  if (gens.empty()) std::cout << "no committed generations\n";
  for (const auto& g : gens) {
    auto m = store.load_manifest(g.index);
    std::cout << "generation " << g.index << ": " << m.process_count << " processes, "
              << m.precious.size() << " precious files, " << human_bytes(m.total_bytes)
              << ", created_at " << g.created_at << "\n";
  }
  for (const auto& w : warnings)
    std::cout << "invalid generation " << w.index << ": " << w.message << "\n";
  std::cout << "next index " << store.next_index() << "\n";
  return 0;
}

int cmd_faultsweep(const std::string& mode_name, std::vector<std::uint64_t> image_sizes,
                   int precious_count, std::uint64_t precious_size, int n_random,
                   std::uint64_t seed, bool verify, bool verbose) {
  StoreMode mode;
  if (mode_name == "atomic")
    mode = StoreMode::kAtomicCommit;
  else if (mode_name == "overwrite")
    mode = StoreMode::kOverwriteInPlace;
  else
    throw Error("unknown mode: " + mode_name);

  HarnessConfig cfg;
  if (!image_sizes.empty()) cfg.image_sizes = std::move(image_sizes);
  for (int i = 0; i < precious_count; ++i)
    cfg.precious_files.push_back({"work/tmp_" + std::to_string(i) + ".bin", precious_size});
  cfg.n_random_offsets = n_random;
  cfg.seed = seed;
  cfg.verify_digests = verify;

  FaultHarness harness(cfg);
  auto summary = harness.sweep(mode);
  for (const auto& r : summary.records) {
    if (!verbose && r.recoverable) continue;
    std::cout << to_string(r.point) << ": " << (r.recoverable ? "recoverable" : "LOST")
              << (r.mixed_state_detected ? " (mixed state)" : "");
    if (r.recovered_generation)
      std::cout << ", recovered generation " << *r.recovered_generation;
    std::cout << "\n";
  }
  std::cout << to_string(mode) << ": " << summary.recoverable_count() << "/" << summary.total()
            << " fault points recoverable, " << summary.mixed_count() << " mixed-state\n";
  return 0;
}

int cmd_report(const std::string& store_root, bool csv) {
  RealFs fs;
  SystemClock clock;
  GenerationStore store(fs, store_root, clock);
  std::vector<ReportRow> rows;
  for (const auto& g : store.committed_generations()) {
    auto m = store.load_manifest(g.index);
    ReportRow row;
    row.checkpoint_index = g.index;
    auto ms = [&](const char* key) {
      auto it = m.phase_timings_ms.find(key);
      return it == m.phase_timings_ms.end() ? 0.0 : it->second / 1000.0;
    };
    row.precious_seconds = ms("precious_write_ms");
    row.image_seconds = ms("image_write_ms");
    row.precious_bytes = m.precious_bytes();
    row.image_bytes = m.image_bytes();
    rows.push_back(row);
  }
  std::cout << (csv ? render_report_csv(rows) : render_report_table(rows));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooperative checkpoint-restart for multi-process pipelines"};
  app.require_subcommand(1);

  // run / bench
  std::string preset = "bog";
  std::uint64_t divisor = 10000;
  std::uint64_t seed = 1;
  std::string policy = "periodic";
  double period = 600;
  int window = 10;
  int keep_k = 2;
  bool csv = false;

  auto add_workload_flags = [&](CLI::App* cmd) {
    cmd->add_option("--preset", preset, "workload preset: bog, spikein, rhizosphere");
    cmd->add_option("--scale-divisor", divisor, "dataset downscale factor");
    cmd->add_option("--seed", seed, "workload seed");
    cmd->add_option("--policy", policy, "trigger policy: periodic, app, combined");
    cmd->add_option("--period", period, "checkpoint period in seconds");
    cmd->add_option("--window", window, "app-initiated trailing window");
    cmd->add_option("--keep-k", keep_k, "generations to retain");
    cmd->add_flag("--csv", csv, "emit CSV instead of a table");
  };

  auto* run = app.add_subcommand("run", "run the synthetic pipeline with checkpoints");
  add_workload_flags(run);

  auto* bench = app.add_subcommand("bench", "measure checkpoint cost under a bandwidth model");
  add_workload_flags(bench);
  std::string congestion = "constant";
  double mu = -0.3, sigma = 0.4, base_rate = 1.5e9;
  bench->add_option("--congestion", congestion, "constant or lognormal");
  bench->add_option("--mu", mu, "lognormal mu");
  bench->add_option("--sigma", sigma, "lognormal sigma");
  bench->add_option("--base-rate", base_rate, "base bandwidth in bytes/s");

  // store-backed commands
  std::string store_flag;
  std::vector<std::string> image_files, precious_files;
  auto* checkpoint = app.add_subcommand("checkpoint", "commit files into a store generation");
  checkpoint->add_option("--store", store_flag, "store root (or GENCKPT_STORE)");
  checkpoint->add_option("--image", image_files, "process image file (repeatable)")
      ->allow_extra_args(false);
  checkpoint->add_option("files", precious_files, "precious files to back up");

  std::int64_t gen = -1;
  std::string out_dir = ".";
  auto* restore = app.add_subcommand("restore", "restore a generation from a store");
  restore->add_option("--store", store_flag, "store root (or GENCKPT_STORE)");
  restore->add_option("--gen", gen, "generation index (default: latest)");
  restore->add_option("--out-dir", out_dir, "directory for restored images");

  auto* inspect = app.add_subcommand("inspect", "list committed generations");
  inspect->add_option("--store", store_flag, "store root (or GENCKPT_STORE)");

  auto* report = app.add_subcommand("report", "per-checkpoint phase timings and sizes");
  report->add_option("--store", store_flag, "store root (or GENCKPT_STORE)");
  report->add_flag("--csv", csv, "emit CSV instead of a table");

  std::string sweep_mode = "atomic";
  std::vector<std::uint64_t> sweep_images;
  int sweep_precious = 3, sweep_random = 0;
  std::uint64_t sweep_precious_size = 1 << 20, sweep_seed = 1;
  bool sweep_verify = false, sweep_verbose = false;
  auto* faultsweep = app.add_subcommand("faultsweep", "crash-injection sweep over a store mode");
  faultsweep->add_option("--mode", sweep_mode, "atomic or overwrite");
  faultsweep->add_option("--image-size", sweep_images, "image bytes per process (repeatable)");
  faultsweep->add_option("--precious-count", sweep_precious, "number of precious files");
  faultsweep->add_option("--precious-size", sweep_precious_size, "bytes per precious file");
  faultsweep->add_option("--random", sweep_random, "extra random-offset fault points");
  faultsweep->add_option("--seed", sweep_seed, "sweep seed");
  faultsweep->add_flag("--verify", sweep_verify, "digest-verify recovered payloads");
  faultsweep->add_flag("--verbose", sweep_verbose, "print every fault point verdict");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (run->parsed())
      return cmd_run(build_workload(preset, divisor, seed, policy, period, window, keep_k),
                     csv);
    if (bench->parsed())
      return cmd_bench(build_workload(preset, divisor, seed, policy, period, window, keep_k),
                       congestion, mu, sigma, base_rate, seed, csv);
    if (checkpoint->parsed())
      return cmd_checkpoint(resolve_store(store_flag), image_files, precious_files);
    if (restore->parsed()) return cmd_restore(resolve_store(store_flag), gen, out_dir);
    if (inspect->parsed()) return cmd_inspect(resolve_store(store_flag));
    if (report->parsed()) return cmd_report(resolve_store(store_flag), csv);
    if (faultsweep->parsed())
      return cmd_faultsweep(sweep_mode, sweep_images, sweep_precious, sweep_precious_size,
                            sweep_random, sweep_seed, sweep_verify, sweep_verbose);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
