#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "genckpt/fs.hpp"
#include "genckpt/store.hpp"

namespace genckpt {

enum class PreciousMode { kPrefixSuffix, kDirectory, kInterceptAllTemp };

/// How temporary files are recognized as precious: by name tag, by a
/// dedicated directory, or conservatively (everything, the costly
/// baseline the tagged modes exist to avoid).
struct PreciousPolicy {
  PreciousMode mode = PreciousMode::kPrefixSuffix;
  std::vector<std::string> prefixes;  // matched against the file name
  std::vector<std::string> suffixes;
  std::optional<std::string> precious_dir;
  bool ckpt_enabled = false;

  void validate() const;
};

enum class FileClass { kPrecious, kOutput, kOther };

/// Deterministic path classification under a policy. Files inside the
/// shadow retention area are kOther: invisible to the application and not
/// collection candidates themselves.
FileClass classify(const std::string& path, const PreciousPolicy& policy);

/// One entry of the precious set handed to staging: where the bytes live
/// right now and how the record should be tagged.
struct CollectedPrecious {
  std::string original_path;
  Lifecycle lifecycle = Lifecycle::kLive;
  std::string source_path;  // original path, or the shadow copy for retained files
  std::uint64_t byte_size = 0;
};

/// Outcome of intercepting an application unlink.
enum class UnlinkResult { kDeleted, kRetained };

/// Per-process tracker: owns the deletion-pending set, intercepts unlinks
/// under ckpt-enabled mode, and assembles the precious set at quiesce.
/// Retained files are moved into `<shadow root>/.retained/` so the
/// application cannot observe them.
class PreciousTracker {
 public:
  PreciousTracker(FileSystem& fs, PreciousPolicy policy, std::string scan_root);

  const PreciousPolicy& policy() const { return policy_; }

  /// Adds a path to the precious set regardless of pattern matching.
  void declare_precious(const std::string& path);

  /// Application-visible deletion. Precious files under ckpt-enabled mode
  /// are retained in the shadow area; the application observes success.
  UnlinkResult intercept_unlink(const std::string& path);

  /// Application-facing listing: what the process believes exists. The
  /// shadow retention area is hidden.
  std::vector<std::string> list_visible(const std::string& dir) const;

  /// Scan-matched live files plus every deletion-pending record, with sizes
  /// as of this call. Caller must be quiesced. Unreadable entries raise
  /// CollectError (a partial precious set must never be committed).
  std::vector<CollectedPrecious> collect_precious_set() const;

  /// Stages the collected set into an open staging area.
  std::vector<PreciousFileRecord> stage_all(StagingHandle& staging) const;

  const std::map<std::string, std::string>& deletion_pending() const {
    return deletion_pending_;
  }

  /// After a restore re-created pending files at their original paths they
  /// are live again; interception reapplies when the application re-deletes.
  void reset_after_restore();

 private:
  std::string shadow_dir() const;

  FileSystem& fs_;
  PreciousPolicy policy_;
  std::string scan_root_;
  std::set<std::string> declared_;
  std::map<std::string, std::string> deletion_pending_;  // original path -> shadow path
};

struct PreciousRestoreOutcome {
  std::vector<std::string> restored;
  std::vector<std::string> overwritten;  // pre-existing conflicting files replaced
};

/// Re-creates every precious file of a committed generation byte-identical
/// at its original path. All backups are read and digest-verified before
/// any application path is touched; a corrupt backup aborts the restore
/// with nothing written.
PreciousRestoreOutcome restore_precious(FileSystem& app_fs, GenerationStore& store,
                                        const CheckpointManifest& manifest);

}  // namespace genckpt
