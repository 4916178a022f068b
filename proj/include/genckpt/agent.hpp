#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "genckpt/digest.hpp"

namespace genckpt {

enum class SectionKind : std::uint8_t { kHeapModel = 0, kMetadata = 1 };

/// Owning section, as produced by restore.
struct StateSection {
  std::string name;
  SectionKind kind = SectionKind::kMetadata;
  std::vector<std::byte> bytes;

  bool operator==(const StateSection&) const = default;
};

/// Non-owning view over a registered state region, as consumed by snapshot.
struct SectionView {
  std::string name;
  SectionKind kind = SectionKind::kMetadata;
  std::span<const std::byte> bytes;
};

struct SnapshotOptions {
  /// Test seam: runs between the integrity pass and the encode pass, where a
  /// concurrent mutation would corrupt the image.
  std::function<void()> between_passes;
};

/// Deterministically encodes all sections into a self-describing image:
/// magic, version, section count, (name, kind, length, bytes) records and a
/// digest trailer. Throws SnapshotRace if a section mutates underneath.
std::vector<std::byte> snapshot_state(std::span<const SectionView> sections,
                                      const SnapshotOptions& options = {});

/// Inverse of snapshot_state. Throws ImageFormatError on malformed input.
std::vector<StateSection> restore_state(std::span<const std::byte> image);

/// Size in bytes that snapshot_state would produce, without encoding.
std::uint64_t snapshot_footprint(std::span<const SectionView> sections);

struct FdRange {
  int start = 0;
  int count = 0;

  bool operator==(const FdRange&) const = default;
};

/// Lowest descriptor range of `needed` slots, at or above 3 and below
/// `max_fd`, disjoint from the application's open descriptors. Throws
/// FdExhaustion when no such gap exists.
FdRange choose_internal_fd_range(const std::set<int>& app_fds, int needed, int max_fd);

struct OpenFileInfo {
  std::string path;
  int descriptor = -1;
  std::string mode;
};

/// Agent-side registry of files the application has opened through the
/// cooperative API. Closed files drop out; a closed-but-precious temp file
/// is deliberately absent here (the precious tracker covers those).
class OpenFileTracker {
 public:
  int open(const std::string& path, const std::string& mode);
  void close(int descriptor);
  std::vector<OpenFileInfo> enumerate() const;
  std::set<int> descriptors() const;

 private:
  std::map<int, OpenFileInfo> open_;
  int next_fd_ = 3;
};

}  // namespace genckpt
