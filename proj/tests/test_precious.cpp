#include <random>

#include "doctest.h"
#include "genckpt/content.hpp"
#include "genckpt/errors.hpp"
#include "genckpt/precious.hpp"

using namespace genckpt;

namespace {

PreciousPolicy tmp_prefix_policy(bool ckpt_enabled) {
  PreciousPolicy p;
  p.mode = PreciousMode::kPrefixSuffix;
  p.prefixes = {"tmp_"};
  p.ckpt_enabled = ckpt_enabled;
  return p;
}

}  // namespace

TEST_CASE("classify by prefix, suffix and directory") {
  auto policy = tmp_prefix_policy(false);
  CHECK(classify("work/tmp_kmers.bin", policy) == FileClass::kPrecious);
  CHECK(classify("work/contigs.fasta", policy) == FileClass::kOutput);

  PreciousPolicy dir_policy;
  dir_policy.mode = PreciousMode::kDirectory;
  dir_policy.precious_dir = "work/precious/";
  CHECK(classify("work/precious/a/b.dat", dir_policy) == FileClass::kPrecious);
  CHECK(classify("work/out.dat", dir_policy) == FileClass::kOutput);

  PreciousPolicy all;
  all.mode = PreciousMode::kInterceptAllTemp;
  CHECK(classify("anything.at.all", all) == FileClass::kPrecious);

  CHECK(classify("work/.retained/abc_tmp_x.bin", policy) == FileClass::kOther);
  CHECK_THROWS_AS(classify("", policy), CollectError);

  PreciousPolicy invalid;  // prefix/suffix mode without patterns
  CHECK_THROWS_AS(invalid.validate(), CollectError);
}

TEST_CASE("intercept_unlink honors ckpt-enable and classification") {
  SimFs fs;
  fs.mkdir_all("work");
  fs.write_file("work/tmp_a.bin", std::string_view("aaa"));
  fs.write_file("work/out.fasta", std::string_view("ooo"));

  SUBCASE("ckpt enabled retains precious files") {
    PreciousTracker tracker(fs, tmp_prefix_policy(true), "work");
    CHECK(tracker.intercept_unlink("work/tmp_a.bin") == UnlinkResult::kRetained);
    CHECK_FALSE(fs.exists("work/tmp_a.bin"));
    REQUIRE(tracker.deletion_pending().count("work/tmp_a.bin") == 1);
    CHECK(fs.read_all_text(tracker.deletion_pending().at("work/tmp_a.bin")) == "aaa");
  }

  SUBCASE("ckpt disabled really deletes") {
    PreciousTracker tracker(fs, tmp_prefix_policy(false), "work");
    CHECK(tracker.intercept_unlink("work/tmp_a.bin") == UnlinkResult::kDeleted);
    CHECK_FALSE(fs.exists("work/tmp_a.bin"));
    CHECK(tracker.deletion_pending().empty());
  }

  SUBCASE("non-precious files are deleted even when ckpt enabled") {
    PreciousTracker tracker(fs, tmp_prefix_policy(true), "work");
    CHECK(tracker.intercept_unlink("work/out.fasta") == UnlinkResult::kDeleted);
  }

  SUBCASE("missing file raises DeleteError") {
    PreciousTracker tracker(fs, tmp_prefix_policy(true), "work");
    CHECK_THROWS_AS(tracker.intercept_unlink("work/nope"), DeleteError);
  }
}

TEST_CASE("application view is identical with and without interception") {
  auto run = [](bool ckpt_enabled) {
    SimFs fs;
    fs.mkdir_all("work");
    PreciousTracker tracker(fs, tmp_prefix_policy(ckpt_enabled), "work");
    fs.write_file("work/tmp_a.bin", std::string_view("a"));
    fs.write_file("work/tmp_b.bin", std::string_view("b"));
    fs.write_file("work/result.fasta", std::string_view("r"));
    tracker.intercept_unlink("work/tmp_a.bin");
    return tracker.list_visible("work");
  };
  CHECK(run(true) == run(false));
}

TEST_CASE("collect_precious_set unions scan matches and deletion-pending records") {
  SimFs fs;
  fs.mkdir_all("work/sub");
  PreciousTracker tracker(fs, tmp_prefix_policy(true), "work");
  fs.write_file("work/tmp_1.bin", pattern_bytes(1, "1", 100));
  fs.write_file("work/sub/tmp_2.bin", pattern_bytes(1, "2", 200));
  fs.write_file("work/tmp_3.bin", pattern_bytes(1, "3", 300));
  fs.write_file("work/tmp_gone.bin", pattern_bytes(1, "g", 50));
  fs.write_file("work/output.fasta", pattern_bytes(1, "o", 10));
  tracker.intercept_unlink("work/tmp_gone.bin");

  auto collected = tracker.collect_precious_set();
  REQUIRE(collected.size() == 4);
  int pending = 0;
  std::uint64_t total = 0;
  for (const auto& c : collected) {
    total += c.byte_size;
    if (c.lifecycle == Lifecycle::kDeletionPending) ++pending;
  }
  CHECK(pending == 1);
  CHECK(total == 650);

  SUBCASE("no matches yields an empty set") {
    SimFs empty;
    empty.mkdir_all("w");
    PreciousTracker t2(empty, tmp_prefix_policy(true), "w");
    CHECK(t2.collect_precious_set().empty());
  }

  SUBCASE("file growth between collections is reflected per call") {
    auto first = tracker.collect_precious_set();
    auto old_bytes = fs.read_all("work/tmp_1.bin");
    auto grown = old_bytes;
    auto extra = pattern_bytes(9, "extra", 64);
    grown.insert(grown.end(), extra.begin(), extra.end());
    fs.write_file("work/tmp_1.bin", grown);
    auto second = tracker.collect_precious_set();
    auto find = [](const auto& v, const std::string& p) {
      for (const auto& c : v)
        if (c.original_path == p) return c.byte_size;
      return std::uint64_t{0};
    };
    CHECK(find(first, "work/tmp_1.bin") == 100);
    CHECK(find(second, "work/tmp_1.bin") == 164);
  }

  SUBCASE("missing retained backup raises CollectError") {
    fs.remove_file(tracker.deletion_pending().at("work/tmp_gone.bin"));
    CHECK_THROWS_AS(tracker.collect_precious_set(), CollectError);
  }

  SUBCASE("explicitly declared files are collected regardless of pattern") {
    tracker.declare_precious("work/output.fasta");
    CHECK(tracker.collect_precious_set().size() == 5);
  }
}

TEST_CASE("restore_precious re-creates files byte-identical") {
  SimFs fs;
  VirtualClock clock;
  fs.mkdir_all("work");
  GenerationStore store(fs, "store", clock);
  PreciousTracker tracker(fs, tmp_prefix_policy(true), "work");

  fs.write_file("work/tmp_a.bin", pattern_bytes(2, "a", 1000));
  fs.mkdir_all("work/nested");
  fs.write_file("work/nested/tmp_b.bin", pattern_bytes(2, "b", 2000));
  fs.write_file("work/tmp_gone.bin", pattern_bytes(2, "g", 500));
  tracker.intercept_unlink("work/tmp_gone.bin");

  auto staging = store.begin_generation({0, 0}, 1);
  auto img = pattern_bytes(1, "img", 64);
  SpanSource src(img);
  staging.stage_image(1, src);
  tracker.stage_all(staging);
  auto manifest = staging.commit();
  REQUIRE(manifest.precious.size() == 3);

  // wipe the work dir, plant a conflicting file, then restore
  fs.remove_tree("work");
  fs.mkdir_all("work");
  fs.write_file("work/tmp_a.bin", std::string_view("conflicting content"));

  auto outcome = restore_precious(fs, store, manifest);
  CHECK(outcome.restored.size() == 3);
  REQUIRE(outcome.overwritten.size() == 1);
  CHECK(outcome.overwritten[0] == "work/tmp_a.bin");
  CHECK(fs.read_all("work/tmp_a.bin") == pattern_bytes(2, "a", 1000));
  CHECK(fs.read_all("work/nested/tmp_b.bin") == pattern_bytes(2, "b", 2000));
  CHECK(fs.read_all("work/tmp_gone.bin") == pattern_bytes(2, "g", 500));

  SUBCASE("restore is idempotent") {
    auto tree_after_first = fs.digest_tree("work");
    auto again = restore_precious(fs, store, manifest);
    CHECK(again.overwritten.empty());
    CHECK(fs.digest_tree("work") == tree_after_first);
  }

  SUBCASE("corrupt backup aborts before touching application paths") {
    const std::string backup = "store/generations/0/" + manifest.precious[0].store_path;
    auto raw = fs.read_all(backup);
    raw[10] ^= std::byte{1};
    fs.write_file(backup, raw);
    fs.write_file("work/tmp_a.bin", std::string_view("untouched"));
    CHECK_THROWS_AS(restore_precious(fs, store, manifest), CorruptImage);
    CHECK(fs.read_all_text("work/tmp_a.bin") == "untouched");
  }

  SUBCASE("empty record list is a no-op") {
    SimFs fs2;
    VirtualClock clock2;
    GenerationStore store2(fs2, "s2", clock2);
    auto staging2 = store2.begin_generation({0, 0}, 1);
    auto img2 = pattern_bytes(1, "i", 10);
    SpanSource src2(img2);
    staging2.stage_image(1, src2);
    auto m2 = staging2.commit();
    auto out2 = restore_precious(fs2, store2, m2);
    CHECK(out2.restored.empty());
  }
}

TEST_CASE("randomized create/write/unlink round trip through one checkpoint") {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 25; ++trial) {
    SimFs fs;
    VirtualClock clock;
    fs.mkdir_all("work");
    GenerationStore store(fs, "store", clock);
    PreciousTracker tracker(fs, tmp_prefix_policy(true), "work");

    std::vector<std::string> live;
    std::uniform_int_distribution<int> op_dist(0, 2);
    std::uniform_int_distribution<std::size_t> size_dist(0, 4096);
    auto mutate = [&](int steps) {
      for (int i = 0; i < steps; ++i) {
        int op = op_dist(rng);
        if (op == 0 || live.empty()) {
          std::string path = "work/tmp_" + std::to_string(rng() % 1000) + ".bin";
          if (!fs.exists(path)) {
            fs.write_file(path, pattern_bytes(rng(), "c", size_dist(rng)));
            live.push_back(path);
          }
        } else if (op == 1) {
          const auto& path = live[rng() % live.size()];
          fs.write_file(path, pattern_bytes(rng(), "w", size_dist(rng)));
        } else {
          std::size_t idx = rng() % live.size();
          tracker.intercept_unlink(live[idx]);
          live.erase(live.begin() + static_cast<std::ptrdiff_t>(idx));
        }
      }
    };

    mutate(15);

    // checkpoint: record expected state = every collected precious file
    auto collected = tracker.collect_precious_set();
    std::map<std::string, Digest> expected;
    for (const auto& c : collected) expected[c.original_path] = fs.digest_file(c.source_path);

    auto staging = store.begin_generation({0, 0}, 1);
    auto img = pattern_bytes(trial, "img", 32);
    SpanSource src(img);
    staging.stage_image(1, src);
    tracker.stage_all(staging);
    auto manifest = staging.commit();

    mutate(15);  // post-checkpoint divergence that restore must undo

    fs.remove_tree("work");
    fs.mkdir_all("work");
    restore_precious(fs, store, manifest);
    for (const auto& [path, digest] : expected) CHECK(fs.digest_file(path) == digest);
  }
}
