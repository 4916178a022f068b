#include "genckpt/precious.hpp"

#include <algorithm>

#include "genckpt/errors.hpp"

namespace genckpt {

namespace {

constexpr const char* kRetainedDirName = ".retained";

std::string basename_of(const std::string& path) {
  auto pos = path.find_last_of('/');
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool under_dir(const std::string& path, const std::string& dir) {
  std::string d = dir;
  while (!d.empty() && d.back() == '/') d.pop_back();
  return starts_with(path, d + "/");
}

}  // namespace

void PreciousPolicy::validate() const {
  if (mode == PreciousMode::kPrefixSuffix && prefixes.empty() && suffixes.empty())
    throw CollectError("prefix/suffix policy requires at least one pattern");
  if (mode == PreciousMode::kDirectory && !precious_dir)
    throw CollectError("directory policy requires precious_dir");
}

FileClass classify(const std::string& path, const PreciousPolicy& policy) {
  if (path.empty()) throw CollectError("empty path");
  if (path.find(std::string("/") + kRetainedDirName + "/") != std::string::npos)
    return FileClass::kOther;
  switch (policy.mode) {
    case PreciousMode::kPrefixSuffix: {
      const std::string name = basename_of(path);
      for (const auto& p : policy.prefixes)
        if (starts_with(name, p)) return FileClass::kPrecious;
      for (const auto& s : policy.suffixes)
        if (ends_with(name, s)) return FileClass::kPrecious;
      return FileClass::kOutput;
    }
    case PreciousMode::kDirectory:
      return policy.precious_dir && under_dir(path, *policy.precious_dir)
                 ? FileClass::kPrecious
                 : FileClass::kOutput;
    case PreciousMode::kInterceptAllTemp:
      return FileClass::kPrecious;
  }
  return FileClass::kOther;
}

PreciousTracker::PreciousTracker(FileSystem& fs, PreciousPolicy policy, std::string scan_root)
    : fs_(fs), policy_(std::move(policy)), scan_root_(std::move(scan_root)) {
  policy_.validate();
}

std::string PreciousTracker::shadow_dir() const {
  const std::string base = policy_.precious_dir ? *policy_.precious_dir : scan_root_;
  return base + "/" + kRetainedDirName;
}

void PreciousTracker::declare_precious(const std::string& path) { declared_.insert(path); }

UnlinkResult PreciousTracker::intercept_unlink(const std::string& path) {
  if (!fs_.exists(path)) throw DeleteError("no such file: " + path);
  bool precious = declared_.count(path) || classify(path, policy_) == FileClass::kPrecious;
  if (policy_.ckpt_enabled && precious) {
    const std::string shadow =
        shadow_dir() + "/" + sha256(path).hex().substr(0, 16) + "_" + basename_of(path);
    fs_.mkdir_all(shadow_dir());
    // re-deletion of a recreated path: the newest content supersedes
    if (fs_.exists(shadow)) fs_.remove_file(shadow);
    fs_.rename(path, shadow);
    deletion_pending_[path] = shadow;
    return UnlinkResult::kRetained;
  }
  try {
    fs_.remove_file(path);
  } catch (const StorageError& e) {
    throw DeleteError(e.what());
  }
  return UnlinkResult::kDeleted;
}

std::vector<std::string> PreciousTracker::list_visible(const std::string& dir) const {
  std::vector<std::string> out;
  if (!fs_.is_dir(dir)) return out;
  for (const auto& name : fs_.list_dir(dir)) {
    if (name == kRetainedDirName) continue;
    out.push_back(name);
  }
  return out;
}

std::vector<CollectedPrecious> PreciousTracker::collect_precious_set() const {
  std::vector<CollectedPrecious> out;
  std::set<std::string> seen;

  auto add_live = [&](const std::string& path) {
    if (seen.count(path) || deletion_pending_.count(path)) return;
    if (!fs_.exists(path)) throw CollectError("precious file unreadable: " + path);
    out.push_back({path, Lifecycle::kLive, path, fs_.file_size(path)});
    seen.insert(path);
  };

  auto scan = [&](auto&& self, const std::string& dir) -> void {
    if (!fs_.is_dir(dir)) return;
    for (const auto& name : fs_.list_dir(dir)) {
      if (name == kRetainedDirName) continue;
      const std::string path = dir + "/" + name;
      if (fs_.is_dir(path)) {
        self(self, path);
      } else if (classify(path, policy_) == FileClass::kPrecious) {
        add_live(path);
      }
    }
  };
  scan(scan, scan_root_);
  for (const auto& path : declared_)
    if (fs_.exists(path)) add_live(path);

  for (const auto& [original, shadow] : deletion_pending_) {
    if (!fs_.exists(shadow))
      throw CollectError("retained backup missing for " + original);
    out.push_back({original, Lifecycle::kDeletionPending, shadow, fs_.file_size(shadow)});
  }

  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.original_path < b.original_path; });
  return out;
}

std::vector<PreciousFileRecord> PreciousTracker::stage_all(StagingHandle& staging) const {
  std::vector<PreciousFileRecord> records;
  for (const auto& item : collect_precious_set()) {
    FsFileSource src(fs_, item.source_path);
    records.push_back(staging.stage_precious(item.original_path, item.lifecycle, src));
  }
  return records;
}

void PreciousTracker::reset_after_restore() { deletion_pending_.clear(); }

PreciousRestoreOutcome restore_precious(FileSystem& app_fs, GenerationStore& store,
                                        const CheckpointManifest& manifest) {
  // Verify every backup before touching any application path.
  std::vector<std::pair<const PreciousFileRecord*, std::vector<std::byte>>> payloads;
  payloads.reserve(manifest.precious.size());
  for (const auto& rec : manifest.precious)
    payloads.emplace_back(&rec, store.read_precious(manifest, rec));

  PreciousRestoreOutcome outcome;
  for (auto& [rec, bytes] : payloads) {
    const std::string& path = rec->original_path;
    if (app_fs.exists(path) && !(app_fs.digest_file(path) == rec->checksum))
      outcome.overwritten.push_back(path);
    auto slash = path.find_last_of('/');
    if (slash != std::string::npos) app_fs.mkdir_all(path.substr(0, slash));
    app_fs.write_file(path, bytes);
    outcome.restored.push_back(path);
  }
  return outcome;
}

}  // namespace genckpt
