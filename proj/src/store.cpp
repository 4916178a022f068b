#include "genckpt/store.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <sstream>

#include "genckpt/errors.hpp"

namespace genckpt {

namespace {

std::string escape_field(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_field(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out.push_back(s[i]);
      continue;
    }
    switch (s[++i]) {
      case '\\': out.push_back('\\'); break;
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      default: throw StorageError("bad escape sequence in manifest field");
    }
  }
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw StorageError("bad integer field: " + s);
  return v;
}

std::int64_t parse_i64(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw StorageError("bad integer field: " + s);
  return v;
}

std::optional<std::uint64_t> numeric_name(const std::string& name) {
  if (name.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), v);
  if (ec != std::errc() || p != name.data() + name.size()) return std::nullopt;
  return v;
}

constexpr const char* kManifestName = "MANIFEST";
constexpr const char* kMetaName = "META";
constexpr const char* kCounterName = "COUNTER";

std::string image_file_name(int pid) { return "image_" + std::to_string(pid) + ".img"; }

std::string precious_file_name(const std::string& original_path) {
  return sha256(original_path).hex().substr(0, 16) + ".bin";
}

// Streams `content` into `path`, flushes, and returns (bytes, digest).
std::pair<std::uint64_t, Digest> write_content(FileSystem& fs, const std::string& path,
                                               ContentSource& content) {
  auto w = fs.create_file(path);
  w->reserve(content.size());
  for (auto chunk = content.next_chunk(); !chunk.empty(); chunk = content.next_chunk())
    w->write(chunk);
  w->flush();
  std::uint64_t bytes = w->bytes_written();
  w->close();
  if (auto known = content.known_digest()) return {bytes, *known};
  return {bytes, fs.digest_file(path)};
}

}  // namespace

std::string to_string(Lifecycle l) {
  return l == Lifecycle::kLive ? "live" : "deletion_pending";
}

Lifecycle lifecycle_from_string(const std::string& s) {
  if (s == "live") return Lifecycle::kLive;
  if (s == "deletion_pending") return Lifecycle::kDeletionPending;
  throw StorageError("bad lifecycle: " + s);
}

std::uint64_t CheckpointManifest::image_bytes() const {
  std::uint64_t n = 0;
  for (const auto& i : images) n += i.byte_size;
  return n;
}

std::uint64_t CheckpointManifest::precious_bytes() const {
  std::uint64_t n = 0;
  for (const auto& p : precious) n += p.byte_size;
  return n;
}

std::string CheckpointManifest::encode() const {
  std::ostringstream out;
  out << "manifest_version\t1\n";
  out << "generation_index\t" << generation.index << "\n";
  out << "created_at\t" << generation.created_at << "\n";
  out << "process_count\t" << process_count << "\n";
  out << "total_bytes\t" << total_bytes << "\n";
  for (const auto& [name, ms] : phase_timings_ms)
    out << "phase\t" << escape_field(name) << "\t" << static_cast<std::uint64_t>(ms) << "\n";
  for (const auto& img : images)
    out << "image\t" << img.process_id << "\t" << img.byte_size << "\t" << img.checksum.hex()
        << "\t" << escape_field(img.relative_path) << "\n";
  for (const auto& p : precious)
    out << "precious\t" << p.byte_size << "\t" << p.checksum.hex() << "\t"
        << to_string(p.lifecycle) << "\t" << escape_field(p.store_path) << "\t"
        << escape_field(p.original_path) << "\n";
  return out.str();
}

CheckpointManifest CheckpointManifest::decode(const std::string& text) {
  CheckpointManifest m;
  bool saw_version = false, saw_index = false, saw_count = false, saw_total = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_tabs(line);
    const std::string& key = f[0];
    if (key == "manifest_version") {
      if (f.size() != 2 || f[1] != "1") throw StorageError("unsupported manifest version");
      saw_version = true;
    } else if (key == "generation_index") {
      m.generation.index = parse_u64(f.at(1));
      saw_index = true;
    } else if (key == "created_at") {
      m.generation.created_at = parse_i64(f.at(1));
    } else if (key == "process_count") {
      m.process_count = static_cast<int>(parse_u64(f.at(1)));
      saw_count = true;
    } else if (key == "total_bytes") {
      m.total_bytes = parse_u64(f.at(1));
      saw_total = true;
    } else if (key == "phase") {
      if (f.size() != 3) throw StorageError("bad phase record");
      m.phase_timings_ms[unescape_field(f[1])] = static_cast<double>(parse_u64(f[2]));
    } else if (key == "image") {
      if (f.size() != 5) throw StorageError("bad image record");
      ProcessImage img;
      img.process_id = static_cast<int>(parse_i64(f[1]));
      img.byte_size = parse_u64(f[2]);
      img.checksum = Digest::from_hex(f[3]);
      img.relative_path = unescape_field(f[4]);
      m.images.push_back(std::move(img));
    } else if (key == "precious") {
      if (f.size() != 6) throw StorageError("bad precious record");
      PreciousFileRecord rec;
      rec.byte_size = parse_u64(f[1]);
      rec.checksum = Digest::from_hex(f[2]);
      rec.lifecycle = lifecycle_from_string(f[3]);
      rec.store_path = unescape_field(f[4]);
      rec.original_path = unescape_field(f[5]);
      m.precious.push_back(std::move(rec));
    } else {
      throw StorageError("unknown manifest key: " + key);
    }
  }
  if (!saw_version || !saw_index || !saw_count || !saw_total)
    throw StorageError("manifest missing required keys");
  if (m.images.size() != static_cast<std::size_t>(m.process_count))
    throw StorageError("manifest image count != process_count");
  std::set<int> pids;
  for (const auto& img : m.images)
    if (!pids.insert(img.process_id).second)
      throw StorageError("manifest has duplicate process_id");
  std::uint64_t sum = m.image_bytes() + m.precious_bytes();
  if (sum != m.total_bytes) throw StorageError("manifest total_bytes mismatch");
  return m;
}

// ---------------------------------------------------------------------------
// StagingHandle

std::string StagingHandle::dir() const { return store_->staging_dir(gen_.index); }

ProcessImage StagingHandle::stage_image(int process_id, ContentSource& content) {
  FileSystem& fs = store_->fs_;
  const std::string img_path = dir() + "/" + image_file_name(process_id);
  const std::string meta_path = img_path + ".meta";
  if (fs.exists(img_path) || fs.exists(meta_path))
    throw DuplicateImage("process " + std::to_string(process_id) + " already staged");

  double t0 = store_->clock_.now();
  auto [bytes, digest] = write_content(fs, img_path, content);
  double ms = (store_->clock_.now() - t0) * 1000.0;

  ProcessImage img;
  img.process_id = process_id;
  img.byte_size = bytes;
  img.checksum = digest;
  img.relative_path = image_file_name(process_id);

  std::ostringstream meta;
  meta << "process_id\t" << process_id << "\n"
       << "byte_size\t" << bytes << "\n"
       << "checksum\t" << digest.hex() << "\n"
       << "write_ms\t" << static_cast<std::uint64_t>(ms) << "\n";
  fs.write_file(meta_path, meta.str());
  return img;
}

PreciousFileRecord StagingHandle::stage_precious(const std::string& original_path,
                                                 Lifecycle lifecycle, ContentSource& content) {
  FileSystem& fs = store_->fs_;
  const std::string name = precious_file_name(original_path);
  const std::string bin_path = dir() + "/precious/" + name;
  const std::string meta_path = bin_path + ".meta";
  if (fs.exists(bin_path) || fs.exists(meta_path))
    throw DuplicatePrecious("already staged: " + original_path);

  double t0 = store_->clock_.now();
  auto [bytes, digest] = write_content(fs, bin_path, content);
  double ms = (store_->clock_.now() - t0) * 1000.0;

  PreciousFileRecord rec;
  rec.original_path = original_path;
  rec.byte_size = bytes;
  rec.checksum = digest;
  rec.lifecycle = lifecycle;
  rec.store_path = "precious/" + name;

  std::ostringstream meta;
  meta << "original_path\t" << escape_field(original_path) << "\n"
       << "byte_size\t" << bytes << "\n"
       << "checksum\t" << digest.hex() << "\n"
       << "lifecycle\t" << to_string(lifecycle) << "\n"
       << "write_ms\t" << static_cast<std::uint64_t>(ms) << "\n";
  fs.write_file(meta_path, meta.str());
  return rec;
}

CheckpointManifest StagingHandle::commit() {
  std::lock_guard lock(store_->writer_mu_);
  FileSystem& fs = store_->fs_;
  const std::string sdir = dir();
  if (!fs.is_dir(sdir)) throw StorageError("staging directory missing: " + sdir);

  CheckpointManifest m;
  m.generation = gen_;
  m.process_count = process_count_;

  double image_ms = 0, precious_ms = 0;
  std::vector<std::string> meta_files;  // staging scaffolding, removed pre-commit

  for (const auto& name : fs.list_dir(sdir)) {
    if (name.size() > 9 && name.substr(name.size() - 9) == ".img.meta") {
      std::string text = fs.read_all_text(sdir + "/" + name);
      ProcessImage img;
      std::istringstream in(text);
      std::string line;
      while (std::getline(in, line)) {
        auto f = split_tabs(line);
        if (f[0] == "process_id") img.process_id = static_cast<int>(parse_i64(f.at(1)));
        else if (f[0] == "byte_size") img.byte_size = parse_u64(f.at(1));
        else if (f[0] == "checksum") img.checksum = Digest::from_hex(f.at(1));
        else if (f[0] == "write_ms") image_ms += static_cast<double>(parse_u64(f.at(1)));
      }
      img.relative_path = image_file_name(img.process_id);
      if (!fs.exists(sdir + "/" + img.relative_path))
        throw IncompleteGeneration("image file missing for process " +
                                   std::to_string(img.process_id));
      m.images.push_back(std::move(img));
      meta_files.push_back(sdir + "/" + name);
    }
  }

  if (fs.exists(sdir + "/precious")) {
    for (const auto& name : fs.list_dir(sdir + "/precious")) {
      if (name.size() <= 5 || name.substr(name.size() - 5) != ".meta") continue;
      std::string text = fs.read_all_text(sdir + "/precious/" + name);
      PreciousFileRecord rec;
      std::istringstream in(text);
      std::string line;
      while (std::getline(in, line)) {
        auto f = split_tabs(line);
        if (f[0] == "original_path") rec.original_path = unescape_field(f.at(1));
        else if (f[0] == "byte_size") rec.byte_size = parse_u64(f.at(1));
        else if (f[0] == "checksum") rec.checksum = Digest::from_hex(f.at(1));
        else if (f[0] == "lifecycle") rec.lifecycle = lifecycle_from_string(f.at(1));
        else if (f[0] == "write_ms") precious_ms += static_cast<double>(parse_u64(f.at(1)));
      }
      rec.store_path = "precious/" + name.substr(0, name.size() - 5);
      if (!fs.exists(sdir + "/" + rec.store_path))
        throw IncompleteGeneration("precious backup missing: " + rec.original_path);
      m.precious.push_back(std::move(rec));
      meta_files.push_back(sdir + "/precious/" + name);
    }
  }

  if (m.images.size() != static_cast<std::size_t>(process_count_))
    throw IncompleteGeneration("staged " + std::to_string(m.images.size()) + " of " +
                               std::to_string(process_count_) + " images");
  std::sort(m.images.begin(), m.images.end(),
            [](const auto& a, const auto& b) { return a.process_id < b.process_id; });
  std::sort(m.precious.begin(), m.precious.end(),
            [](const auto& a, const auto& b) { return a.original_path < b.original_path; });
  m.total_bytes = m.image_bytes() + m.precious_bytes();
  m.phase_timings_ms["image_write_ms"] = image_ms;
  m.phase_timings_ms["precious_write_ms"] = precious_ms;

  for (const auto& p : meta_files) fs.remove_file(p);
  if (fs.exists(sdir + "/" + kMetaName)) fs.remove_file(sdir + "/" + kMetaName);

  fs.write_file(sdir + "/" + kManifestName, m.encode());
  fs.flush_dir(sdir);

  const std::string target = store_->generation_dir(gen_.index);
  store_->trace("commit.before_rename");
  fs.mkdir_all(store_->root_ + "/generations");
  fs.rename(sdir, target);
  store_->trace("commit.after_rename");
  fs.flush_dir(store_->root_ + "/generations");
  return m;
}

void StagingHandle::abort() {
  FileSystem& fs = store_->fs_;
  fs.remove_tree(dir());
}

// ---------------------------------------------------------------------------
// GenerationStore

GenerationStore::GenerationStore(FileSystem& fs, std::string root, Clock& clock,
                                 StoreOptions opts)
    : fs_(fs), root_(std::move(root)), clock_(clock), opts_(std::move(opts)) {
  fs_.mkdir_all(root_ + "/staging");
  fs_.mkdir_all(root_ + "/generations");
}

std::string GenerationStore::staging_dir(std::uint64_t index) const {
  return root_ + "/staging/" + std::to_string(index);
}

std::string GenerationStore::generation_dir(std::uint64_t index) const {
  return root_ + "/generations/" + std::to_string(index);
}

void GenerationStore::trace(std::string_view point) const {
  if (opts_.trace_hook) opts_.trace_hook(point);
}

void GenerationStore::bump_counter(std::uint64_t next) {
  fs_.write_file(root_ + "/" + kCounterName, "next_index\t" + std::to_string(next) + "\n");
}

std::optional<std::uint64_t> GenerationStore::read_counter() const {
  const std::string path = root_ + "/" + kCounterName;
  if (!fs_.exists(path)) return std::nullopt;
  auto f = split_tabs(fs_.read_all_text(path));
  if (f.size() < 2 || f[0] != "next_index") return std::nullopt;
  std::string value = f[1];
  if (!value.empty() && value.back() == '\n') value.pop_back();
  return numeric_name(value);
}

StagingHandle GenerationStore::begin_generation(GenerationId gen, int process_count) {
  std::lock_guard lock(writer_mu_);
  if (process_count < 1) throw StorageError("process_count must be >= 1");
  auto latest = latest_committed();
  if (latest && gen.index <= latest->index)
    throw StaleGeneration("generation " + std::to_string(gen.index) +
                          " not beyond latest committed " + std::to_string(latest->index));
  const std::string sdir = staging_dir(gen.index);
  if (fs_.exists(sdir)) throw DuplicateStaging("staging already exists: " + sdir);
  fs_.mkdir_all(sdir);
  fs_.mkdir_all(sdir + "/precious");
  std::ostringstream meta;
  meta << "index\t" << gen.index << "\n"
       << "created_at\t" << gen.created_at << "\n"
       << "process_count\t" << process_count << "\n";
  fs_.write_file(sdir + "/" + kMetaName, meta.str());
  bump_counter(gen.index + 1);
  return StagingHandle(this, gen, process_count);
}

StagingHandle GenerationStore::attach_staging(std::uint64_t index) {
  const std::string meta_path = staging_dir(index) + "/" + kMetaName;
  if (!fs_.exists(meta_path)) throw NotFound("no staging for index " + std::to_string(index));
  GenerationId gen{index, 0};
  int process_count = 0;
  std::istringstream in(fs_.read_all_text(meta_path));
  std::string line;
  while (std::getline(in, line)) {
    auto f = split_tabs(line);
    if (f[0] == "created_at") gen.created_at = parse_i64(f.at(1));
    else if (f[0] == "process_count") process_count = static_cast<int>(parse_u64(f.at(1)));
  }
  if (process_count < 1) throw StorageError("staging META invalid: " + meta_path);
  return StagingHandle(this, gen, process_count);
}

bool GenerationStore::validate_generation(std::uint64_t index, CheckpointManifest* out,
                                          std::string* error) const {
  const std::string gdir = generation_dir(index);
  try {
    const std::string manifest_path = gdir + "/" + kManifestName;
    if (!fs_.exists(manifest_path)) throw StorageError("manifest missing");
    CheckpointManifest m = CheckpointManifest::decode(fs_.read_all_text(manifest_path));
    if (m.generation.index != index) throw StorageError("manifest index != directory index");
    auto check_file = [&](const std::string& rel, std::uint64_t size, const Digest& digest) {
      const std::string path = gdir + "/" + rel;
      if (!fs_.exists(path)) throw StorageError("listed file missing: " + rel);
      if (fs_.file_size(path) != size) throw StorageError("size mismatch: " + rel);
      if (opts_.verify_digests_on_scan && !(fs_.digest_file(path) == digest))
        throw StorageError("digest mismatch: " + rel);
    };
    for (const auto& img : m.images) check_file(img.relative_path, img.byte_size, img.checksum);
    for (const auto& p : m.precious) check_file(p.store_path, p.byte_size, p.checksum);
    if (out) *out = std::move(m);
    return true;
  } catch (const Error& e) {
    if (error) *error = e.what();
    return false;
  }
}

std::vector<GenerationId> GenerationStore::committed_generations(
    std::vector<ValidationWarning>* warnings) const {
  std::vector<GenerationId> out;
  const std::string gens = root_ + "/generations";
  if (!fs_.exists(gens)) return out;
  for (const auto& name : fs_.list_dir(gens)) {
    auto index = numeric_name(name);
    if (!index) {
      if (warnings) warnings->push_back({0, "unexpected entry: " + name});
      continue;
    }
    CheckpointManifest m;
    std::string error;
    if (validate_generation(*index, &m, &error)) {
      out.push_back(m.generation);
    } else if (warnings) {
      warnings->push_back({*index, error});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

std::optional<GenerationId> GenerationStore::latest_committed(
    std::vector<ValidationWarning>* warnings) const {
  auto gens = committed_generations(warnings);
  if (gens.empty()) return std::nullopt;
  return gens.back();
}

std::uint64_t GenerationStore::next_index() const {
  std::uint64_t next = 0;
  if (auto counter = read_counter()) next = std::max(next, *counter);
  if (auto latest = latest_committed()) next = std::max(next, latest->index + 1);
  const std::string sdir = root_ + "/staging";
  if (fs_.exists(sdir)) {
    for (const auto& name : fs_.list_dir(sdir))
      if (auto index = numeric_name(name)) next = std::max(next, *index + 1);
  }
  return next;
}

GenerationId GenerationStore::next_id() const { return {next_index(), clock_.now_unix()}; }

std::vector<GenerationId> GenerationStore::prune(int keep_k,
                                                 std::vector<ValidationWarning>* failures) {
  std::lock_guard lock(writer_mu_);
  if (keep_k < 1) throw StorageError("keep_k must be >= 1");
  auto gens = committed_generations();
  std::vector<GenerationId> removed;
  if (gens.size() <= static_cast<std::size_t>(keep_k)) return removed;
  trace("prune.start");
  for (std::size_t i = 0; i + static_cast<std::size_t>(keep_k) < gens.size(); ++i) {
    const auto gen = gens[i];
    const std::string gdir = generation_dir(gen.index);
    try {
      // Manifest goes last so a partially removed generation never validates.
      std::vector<std::string> files, dirs;
      auto walk = [&](auto&& self, const std::string& p) -> void {
        if (fs_.is_dir(p)) {
          dirs.push_back(p);
          for (const auto& n : fs_.list_dir(p)) self(self, p + "/" + n);
        } else {
          files.push_back(p);
        }
      };
      walk(walk, gdir);
      const std::string manifest_path = gdir + "/" + kManifestName;
      for (const auto& f : files)
        if (f != manifest_path) fs_.remove_file(f);
      trace("prune.before_manifest_delete");
      fs_.remove_file(manifest_path);
      std::sort(dirs.begin(), dirs.end(), std::greater<>());
      for (const auto& d : dirs) fs_.remove_dir(d);
      removed.push_back(gen);
      trace("prune.generation_removed");
    } catch (const Error& e) {
      if (failures) failures->push_back({gen.index, e.what()});
    }
  }
  return removed;
}

void GenerationStore::discard_staging() {
  std::lock_guard lock(writer_mu_);
  const std::string sdir = root_ + "/staging";
  if (!fs_.exists(sdir)) return;
  for (const auto& name : fs_.list_dir(sdir)) fs_.remove_tree(sdir + "/" + name);
}

CheckpointManifest GenerationStore::load_manifest(std::uint64_t index) const {
  CheckpointManifest m;
  std::string error;
  if (!fs_.exists(generation_dir(index)))
    throw NotFound("no committed generation " + std::to_string(index));
  if (!validate_generation(index, &m, &error))
    throw CorruptImage("generation " + std::to_string(index) + " does not validate: " + error);
  return m;
}

namespace {
std::vector<std::byte> read_verified(const FileSystem& fs, const std::string& path,
                                     std::uint64_t size, const Digest& digest,
                                     const std::string& what) {
  if (!fs.exists(path)) throw CorruptImage(what + ": file missing");
  auto bytes = fs.read_all(path);
  if (bytes.size() != size || !(sha256(std::span<const std::byte>(bytes)) == digest))
    throw CorruptImage(what + ": digest mismatch");
  return bytes;
}
}  // namespace

std::vector<std::byte> GenerationStore::read_image(const CheckpointManifest& m,
                                                   int process_id) const {
  for (const auto& img : m.images) {
    if (img.process_id != process_id) continue;
    const std::string path = generation_dir(m.generation.index) + "/" + img.relative_path;
    return read_verified(fs_, path, img.byte_size, img.checksum,
                         "image for process " + std::to_string(process_id));
  }
  throw NotFound("no image for process " + std::to_string(process_id));
}

std::vector<std::byte> GenerationStore::read_precious(const CheckpointManifest& m,
                                                      const PreciousFileRecord& rec) const {
  const std::string path = generation_dir(m.generation.index) + "/" + rec.store_path;
  return read_verified(fs_, path, rec.byte_size, rec.checksum, "precious " + rec.original_path);
}

// ---------------------------------------------------------------------------
// OverwriteStore

namespace {
constexpr char kOverwriteMagic[4] = {'G', 'C', 'O', 'W'};
constexpr std::size_t kOverwriteHeader = 4 + 8 + 8;
}  // namespace

OverwriteStore::OverwriteStore(FileSystem& fs, std::string root)
    : fs_(fs), root_(std::move(root)) {
  fs_.mkdir_all(root_ + "/images");
  fs_.mkdir_all(root_ + "/precious");
}

namespace {
void overwrite_slot(FileSystem& fs, const std::string& path, std::uint64_t gen_index,
                    ContentSource& content) {
  auto w = fs.create_file(path);
  w->reserve(kOverwriteHeader + content.size() + 32);
  Hasher h;
  std::byte header[kOverwriteHeader];
  std::memcpy(header, kOverwriteMagic, 4);
  std::uint64_t size = content.size();
  std::memcpy(header + 4, &gen_index, 8);
  std::memcpy(header + 12, &size, 8);
  w->write(std::span<const std::byte>(header, kOverwriteHeader));
  h.update(std::span<const std::byte>(header, kOverwriteHeader));
  for (auto chunk = content.next_chunk(); !chunk.empty(); chunk = content.next_chunk()) {
    w->write(chunk);
    h.update(chunk);
  }
  Digest d = h.finish();
  w->write(std::as_bytes(std::span(d.bytes)));
  w->flush();
  w->close();
}
}  // namespace

void OverwriteStore::write_image(int process_id, std::uint64_t gen_index,
                                 ContentSource& content) {
  overwrite_slot(fs_, root_ + "/images/" + image_file_name(process_id), gen_index, content);
}

void OverwriteStore::write_precious(const std::string& original_path, std::uint64_t gen_index,
                                    ContentSource& content) {
  overwrite_slot(fs_, root_ + "/precious/" + precious_file_name(original_path), gen_index,
                 content);
}

OverwriteStore::ScanResult OverwriteStore::scan(int expected_process_count) const {
  ScanResult r;
  std::vector<std::uint64_t> valid_indices;
  int slot_count = 0;
  const std::string dir = root_ + "/images";
  for (const auto& name : fs_.list_dir(dir)) {
    ++slot_count;
    auto bytes = fs_.read_all(dir + "/" + name);
    if (bytes.size() < kOverwriteHeader + 32 ||
        std::memcmp(bytes.data(), kOverwriteMagic, 4) != 0) {
      r.notes.push_back(name + ": malformed image");
      continue;
    }
    std::uint64_t index = 0, size = 0;
    std::memcpy(&index, bytes.data() + 4, 8);
    std::memcpy(&size, bytes.data() + 12, 8);
    if (bytes.size() != kOverwriteHeader + size + 32) {
      r.notes.push_back(name + ": truncated image");
      continue;
    }
    Digest recorded;
    std::memcpy(recorded.bytes.data(), bytes.data() + bytes.size() - 32, 32);
    Digest actual =
        sha256(std::span<const std::byte>(bytes.data(), bytes.size() - 32));
    if (!(recorded == actual)) {
      r.notes.push_back(name + ": digest mismatch");
      continue;
    }
    valid_indices.push_back(index);
  }
  std::sort(valid_indices.begin(), valid_indices.end());
  valid_indices.erase(std::unique(valid_indices.begin(), valid_indices.end()),
                      valid_indices.end());
  std::size_t valid_count = 0;
  {
    // recount (unique() collapsed duplicates); rescan cheaply from notes
    valid_count = static_cast<std::size_t>(slot_count) - r.notes.size();
  }
  r.mixed_state = valid_indices.size() >= 2 ||
                  (valid_count >= 1 && valid_count < static_cast<std::size_t>(expected_process_count));
  r.restorable = valid_indices.size() == 1 &&
                 valid_count == static_cast<std::size_t>(expected_process_count) &&
                 slot_count == expected_process_count;
  if (r.restorable) r.generation = valid_indices.front();
  return r;
}

}  // namespace genckpt
