#include <optional>
#include <random>

#include "doctest.h"
#include "genckpt/agent.hpp"
#include "genckpt/content.hpp"
#include "genckpt/errors.hpp"

using namespace genckpt;

namespace {

std::vector<SectionView> views(const std::vector<StateSection>& sections) {
  std::vector<SectionView> out;
  for (const auto& s : sections) out.push_back({s.name, s.kind, s.bytes});
  return out;
}

// Independent gap scan used as the oracle for fd-range selection.
std::optional<FdRange> brute_force_fd_range(const std::set<int>& app_fds, int needed,
                                            int max_fd) {
  for (int start = 3; start + needed <= max_fd; ++start) {
    bool free = true;
    for (int fd = start; fd < start + needed; ++fd)
      if (app_fds.count(fd)) {
        free = false;
        break;
      }
    if (free) return FdRange{start, needed};
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("snapshot encodes sections with exact footprint") {
  std::vector<StateSection> sections{
      {"meta", SectionKind::kMetadata, pattern_bytes(1, "meta", 10)},
      {"heap", SectionKind::kHeapModel, pattern_bytes(1, "heap", 1 << 20)},
  };
  auto image = snapshot_state(views(sections));
  CHECK(image.size() == snapshot_footprint(views(sections)));
  CHECK(image.size() > (1u << 20) + 10u);

  auto restored = restore_state(image);
  CHECK(restored == sections);
}

TEST_CASE("zero sections produce a valid header-only stream") {
  auto image = snapshot_state({});
  CHECK(image.size() == snapshot_footprint({}));
  CHECK(restore_state(image).empty());
}

TEST_CASE("snapshot is deterministic") {
  std::vector<StateSection> sections{
      {"a", SectionKind::kMetadata, pattern_bytes(2, "a", 4096)}};
  CHECK(snapshot_state(views(sections)) == snapshot_state(views(sections)));
}

TEST_CASE("snapshot/restore is a byte-exact involution over random sections") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<StateSection> sections;
    std::uniform_int_distribution<int> count_dist(0, 5);
    std::uniform_int_distribution<std::size_t> size_dist(0, 1 << 16);
    int n = count_dist(rng);
    for (int i = 0; i < n; ++i) {
      sections.push_back({"s" + std::to_string(i),
                          i % 2 ? SectionKind::kHeapModel : SectionKind::kMetadata,
                          pattern_bytes(rng(), "sec", size_dist(rng))});
    }
    auto image = snapshot_state(views(sections));
    auto restored = restore_state(image);
    CHECK(restored == sections);
    // restore then snapshot reproduces the original image bit for bit
    CHECK(snapshot_state(views(restored)) == image);
  }
}

TEST_CASE("malformed images are rejected") {
  std::vector<StateSection> sections{
      {"x", SectionKind::kMetadata, pattern_bytes(3, "x", 1000)}};
  auto image = snapshot_state(views(sections));

  SUBCASE("truncated") {
    image.resize(image.size() - 7);
    CHECK_THROWS_AS(restore_state(image), ImageFormatError);
  }
  SUBCASE("flipped byte") {
    image[20] ^= std::byte{0xff};
    CHECK_THROWS_AS(restore_state(image), ImageFormatError);
  }
  SUBCASE("too small") {
    CHECK_THROWS_AS(restore_state(std::vector<std::byte>(5)), ImageFormatError);
  }
}

TEST_CASE("mutation between snapshot passes raises SnapshotRace") {
  std::vector<std::byte> buf = pattern_bytes(4, "buf", 512);
  std::vector<SectionView> sections{{"heap", SectionKind::kHeapModel, buf}};
  SnapshotOptions options;
  options.between_passes = [&] { buf[0] ^= std::byte{1}; };
  CHECK_THROWS_AS(snapshot_state(sections, options), SnapshotRace);
}

TEST_CASE("fd range selection picks the lowest feasible gap") {
  std::set<int> dense;
  for (int fd = 0; fd < 1024; ++fd) dense.insert(fd);
  CHECK(choose_internal_fd_range(dense, 16, 65536) == FdRange{1024, 16});

  std::set<int> gappy;
  for (int fd = 0; fd <= 9; ++fd) gappy.insert(fd);
  for (int fd = 12; fd <= 19; ++fd) gappy.insert(fd);
  CHECK(choose_internal_fd_range(gappy, 2, 65536) == FdRange{10, 2});

  std::set<int> full;
  for (int fd = 0; fd < 65536; ++fd) full.insert(fd);
  CHECK_THROWS_AS(choose_internal_fd_range(full, 1, 65536), FdExhaustion);
}

TEST_CASE("fd range matches brute-force oracle on random descriptor sets") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    std::set<int> app_fds;
    std::uniform_int_distribution<int> fd_dist(0, 127);
    std::uniform_int_distribution<int> count_dist(0, 100);
    std::uniform_int_distribution<int> needed_dist(1, 20);
    int n = count_dist(rng);
    for (int i = 0; i < n; ++i) app_fds.insert(fd_dist(rng));
    int needed = needed_dist(rng);
    auto expected = brute_force_fd_range(app_fds, needed, 128);
    if (expected) {
      auto got = choose_internal_fd_range(app_fds, needed, 128);
      CHECK(got == *expected);
      for (int fd = got.start; fd < got.start + got.count; ++fd)
        CHECK(app_fds.count(fd) == 0);
    } else {
      CHECK_THROWS_AS(choose_internal_fd_range(app_fds, needed, 128), FdExhaustion);
    }
  }
}

TEST_CASE("open file tracker lists only currently open files") {
  OpenFileTracker tracker;
  CHECK(tracker.enumerate().empty());
  int a = tracker.open("work/a.bin", "w");
  int b = tracker.open("work/b.bin", "r");
  CHECK(tracker.enumerate().size() == 2);
  CHECK(tracker.descriptors() == std::set<int>{a, b});
  tracker.close(a);  // closed-but-precious files are absent by definition
  auto open_files = tracker.enumerate();
  REQUIRE(open_files.size() == 1);
  CHECK(open_files[0].path == "work/b.bin");
}
