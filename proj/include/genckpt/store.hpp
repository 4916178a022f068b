#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "genckpt/clock.hpp"
#include "genckpt/content.hpp"
#include "genckpt/digest.hpp"
#include "genckpt/fs.hpp"

namespace genckpt {

/// Identity of one committed checkpoint instance. Indices are strictly
/// increasing across the lifetime of a store.
struct GenerationId {
  std::uint64_t index = 0;
  std::int64_t created_at = 0;  // unix seconds

  bool operator==(const GenerationId&) const = default;
};

struct ProcessImage {
  int process_id = 0;
  std::uint64_t byte_size = 0;
  Digest checksum;
  std::string relative_path;  // store-relative, inside the generation dir
};

enum class Lifecycle { kLive, kDeletionPending };
std::string to_string(Lifecycle l);
Lifecycle lifecycle_from_string(const std::string& s);

struct PreciousFileRecord {
  std::string original_path;
  std::uint64_t byte_size = 0;
  Digest checksum;
  Lifecycle lifecycle = Lifecycle::kLive;
  std::string store_path;  // store-relative path of the backup copy
};

/// Committed record of one checkpoint instance: all process images plus the
/// precious backups, with phase timings for reporting.
struct CheckpointManifest {
  GenerationId generation;
  int process_count = 0;
  std::vector<ProcessImage> images;
  std::vector<PreciousFileRecord> precious;
  std::uint64_t total_bytes = 0;
  std::map<std::string, double> phase_timings_ms;

  std::uint64_t image_bytes() const;
  std::uint64_t precious_bytes() const;

  /// Line-oriented key<TAB>value encoding, bit-exact (see docs/store-format.md).
  std::string encode() const;
  static CheckpointManifest decode(const std::string& text);
};

struct ValidationWarning {
  std::uint64_t index = 0;
  std::string message;
};

struct StoreOptions {
  /// Recovery scan recomputes content digests instead of only checking
  /// presence and size.
  bool verify_digests_on_scan = false;
  /// Invoked at named protocol points inside commit/prune; the fault
  /// harness installs a hook that throws InjectedCrash.
  std::function<void(std::string_view point)> trace_hook;
};

class GenerationStore;

/// Open staging area for one in-flight generation. Images and precious
/// files for distinct identities may be staged concurrently; commit and
/// abort are single-caller.
class StagingHandle {
 public:
  std::uint64_t index() const { return gen_.index; }
  int process_count() const { return process_count_; }

  /// Durably writes one process image; the previous generation is untouched.
  ProcessImage stage_image(int process_id, ContentSource& content);
  /// Durably writes the backup copy of one precious file.
  PreciousFileRecord stage_precious(const std::string& original_path, Lifecycle lifecycle,
                                    ContentSource& content);
  /// Atomicity point: writes the manifest, then renames the staging
  /// directory into generations/. Requires all process_count images staged.
  CheckpointManifest commit();
  /// Removes the staging directory; committed state is unaffected.
  void abort();

 private:
  friend class GenerationStore;
  StagingHandle(GenerationStore* store, GenerationId gen, int process_count)
      : store_(store), gen_(gen), process_count_(process_count) {}

  std::string dir() const;

  GenerationStore* store_;
  GenerationId gen_;
  int process_count_;
};

/// Persistent generation store: atomic crash-consistent commit of full
/// checkpoint instances, recovery scan, retention pruning.
///
/// On-disk layout under the root:
///   COUNTER                    next-index sequencer
///   staging/<i>/               in-flight generation (invisible to recovery)
///   generations/<i>/MANIFEST   committed generation
class GenerationStore {
 public:
  GenerationStore(FileSystem& fs, std::string root, Clock& clock, StoreOptions opts = {});

  /// Opens a staging area for `gen`. The index must exceed every committed
  /// generation.
  StagingHandle begin_generation(GenerationId gen, int process_count);
  /// Re-attaches to a staging area created by another store instance over
  /// the same root (separate-process agents).
  StagingHandle attach_staging(std::uint64_t index);

  /// Newest committed generation whose manifest validates; staging is never
  /// considered. Invalid generations produce warnings, not errors.
  std::optional<GenerationId> latest_committed(
      std::vector<ValidationWarning>* warnings = nullptr) const;

  /// All committed generations that validate, ascending by index.
  std::vector<GenerationId> committed_generations(
      std::vector<ValidationWarning>* warnings = nullptr) const;

  /// Monotone sequencer for the next generation index.
  std::uint64_t next_index() const;
  GenerationId next_id() const;

  /// Keeps the newest keep_k committed generations; never removes the
  /// latest. Returns what was removed.
  std::vector<GenerationId> prune(int keep_k, std::vector<ValidationWarning>* failures = nullptr);

  /// Removes leftover staging directories (post-crash or post-abort cleanup).
  void discard_staging();

  CheckpointManifest load_manifest(std::uint64_t index) const;
  /// Image bytes, digest-verified against the manifest record.
  std::vector<std::byte> read_image(const CheckpointManifest& m, int process_id) const;
  /// Backup bytes of one precious record, digest-verified.
  std::vector<std::byte> read_precious(const CheckpointManifest& m,
                                       const PreciousFileRecord& rec) const;

  const std::string& root() const { return root_; }
  FileSystem& fs() { return fs_; }
  Clock& clock() { return clock_; }

 private:
  friend class StagingHandle;

  std::string staging_dir(std::uint64_t index) const;
  std::string generation_dir(std::uint64_t index) const;
  void bump_counter(std::uint64_t next);
  std::optional<std::uint64_t> read_counter() const;
  bool validate_generation(std::uint64_t index, CheckpointManifest* out,
                           std::string* error) const;
  void trace(std::string_view point) const;

  FileSystem& fs_;
  std::string root_;
  Clock& clock_;
  StoreOptions opts_;
  mutable std::mutex writer_mu_;  // serializes begin/commit/prune
};

/// Deliberately broken baseline: every process replaces its own prior
/// image in place, no staging and no barrier. A crash while one process
/// has replaced its image and another has not leaves a mixed-generation
/// set from which no restore is possible.
class OverwriteStore {
 public:
  OverwriteStore(FileSystem& fs, std::string root);

  /// Truncates and rewrites this process's single image slot.
  void write_image(int process_id, std::uint64_t gen_index, ContentSource& content);
  /// Truncates and rewrites the backup slot for one precious file.
  void write_precious(const std::string& original_path, std::uint64_t gen_index,
                      ContentSource& content);

  struct ScanResult {
    bool restorable = false;
    std::optional<std::uint64_t> generation;  // set iff restorable
    bool mixed_state = false;
    std::vector<std::string> notes;
  };
  /// Validates every image slot (header + digest trailer) and reports
  /// whether a consistent instance exists.
  ScanResult scan(int expected_process_count) const;

 private:
  FileSystem& fs_;
  std::string root_;
};

}  // namespace genckpt
