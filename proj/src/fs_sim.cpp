#include <algorithm>
#include <map>
#include <mutex>
#include <optional>

#include "genckpt/errors.hpp"
#include "genckpt/fs.hpp"

namespace genckpt {

namespace {

using Buffer = std::vector<std::byte>;
using BufferPtr = std::shared_ptr<Buffer>;

struct Node {
  bool is_dir = false;
  // file state; content is copy-on-write so clones and readers stay stable
  BufferPtr data;
  BufferPtr durable;  // content at last flush; null if never flushed
  std::map<std::string, std::shared_ptr<Node>> children;

  static std::shared_ptr<Node> make_dir() {
    auto n = std::make_shared<Node>();
    n->is_dir = true;
    return n;
  }
  static std::shared_ptr<Node> make_file() {
    auto n = std::make_shared<Node>();
    n->data = std::make_shared<Buffer>();
    return n;
  }
};

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

std::shared_ptr<Node> deep_clone(const Node& n) {
  auto copy = std::make_shared<Node>();
  copy->is_dir = n.is_dir;
  copy->data = n.data;        // shared, COW on write
  copy->durable = n.durable;  // shared
  for (const auto& [name, child] : n.children) copy->children[name] = deep_clone(*child);
  return copy;
}

// Durable view: files revert to last-flushed content; never-flushed files vanish.
std::shared_ptr<Node> durable_clone(const Node& n) {
  auto copy = std::make_shared<Node>();
  copy->is_dir = n.is_dir;
  if (!n.is_dir) {
    copy->data = n.durable;
    copy->durable = n.durable;
  }
  for (const auto& [name, child] : n.children) {
    if (!child->is_dir && !child->durable) continue;
    copy->children[name] = durable_clone(*child);
  }
  return copy;
}

}  // namespace

struct SimFs::Impl {
  mutable std::mutex mu;
  std::shared_ptr<Node> root = Node::make_dir();
  VirtualClock* clock = nullptr;
  std::optional<BandwidthModel> bw;

  std::shared_ptr<Node> lookup(const std::string& path) const {
    auto cur = root;
    for (const auto& part : split_path(path)) {
      if (!cur || !cur->is_dir) return nullptr;
      auto it = cur->children.find(part);
      if (it == cur->children.end()) return nullptr;
      cur = it->second;
    }
    return cur;
  }

  // Parent node of `path`; also yields the final component.
  std::shared_ptr<Node> parent_of(const std::string& path, std::string& leaf) const {
    auto parts = split_path(path);
    if (parts.empty()) return nullptr;
    leaf = parts.back();
    auto cur = root;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!cur->is_dir) return nullptr;
      auto it = cur->children.find(parts[i]);
      if (it == cur->children.end()) return nullptr;
      cur = it->second;
    }
    return cur && cur->is_dir ? cur : nullptr;
  }

  void charge_write(std::size_t bytes) {
    if (clock && bw && bytes > 0) clock->advance(bw->write_duration(bytes, clock->now()));
  }
};

namespace {

class SimFileWriter final : public FileWriter {
 public:
  SimFileWriter(SimFs::Impl* impl, std::shared_ptr<Node> node) : impl_(impl), node_(std::move(node)) {}

  void reserve(std::uint64_t n) override {
    std::lock_guard lock(impl_->mu);
    if (node_->data.use_count() > 1) node_->data = std::make_shared<Buffer>(*node_->data);
    node_->data->reserve(node_->data->size() + n);
  }

  void write(std::span<const std::byte> chunk) override {
    std::lock_guard lock(impl_->mu);
    if (node_->data.use_count() > 1) node_->data = std::make_shared<Buffer>(*node_->data);
    node_->data->insert(node_->data->end(), chunk.begin(), chunk.end());
    written_ += chunk.size();
    impl_->charge_write(chunk.size());
  }

  void flush() override {
    std::lock_guard lock(impl_->mu);
    node_->durable = node_->data;
  }

  void close() override {}
  std::uint64_t bytes_written() const override { return written_; }

 private:
  SimFs::Impl* impl_;
  std::shared_ptr<Node> node_;
  std::uint64_t written_ = 0;
};

class SimFileReader final : public FileReader {
 public:
  explicit SimFileReader(BufferPtr data) : data_(std::move(data)) {}

  std::size_t read(std::span<std::byte> out) override {
    std::size_t n = std::min(out.size(), data_->size() - pos_);
    std::copy_n(data_->begin() + static_cast<std::ptrdiff_t>(pos_), n, out.begin());
    pos_ += n;
    return n;
  }

 private:
  BufferPtr data_;  // holding a reference forces COW on concurrent writes
  std::size_t pos_ = 0;
};

}  // namespace

SimFs::SimFs() : impl_(std::make_unique<Impl>()) {}
SimFs::SimFs(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
SimFs::~SimFs() = default;

void SimFs::attach_bandwidth(VirtualClock* clock, BandwidthModel bw) {
  std::lock_guard lock(impl_->mu);
  impl_->clock = clock;
  impl_->bw = std::move(bw);
}

std::unique_ptr<SimFs> SimFs::clone() const {
  std::lock_guard lock(impl_->mu);
  auto impl = std::make_unique<Impl>();
  impl->root = deep_clone(*impl_->root);
  return std::unique_ptr<SimFs>(new SimFs(std::move(impl)));
}

std::unique_ptr<SimFs> SimFs::crash_kill() const { return clone(); }

std::unique_ptr<SimFs> SimFs::crash_power() const {
  std::lock_guard lock(impl_->mu);
  auto impl = std::make_unique<Impl>();
  impl->root = durable_clone(*impl_->root);
  return std::unique_ptr<SimFs>(new SimFs(std::move(impl)));
}

bool SimFs::exists(const std::string& path) const {
  std::lock_guard lock(impl_->mu);
  return impl_->lookup(path) != nullptr;
}

bool SimFs::is_dir(const std::string& path) const {
  std::lock_guard lock(impl_->mu);
  auto n = impl_->lookup(path);
  return n && n->is_dir;
}

std::uint64_t SimFs::file_size(const std::string& path) const {
  std::lock_guard lock(impl_->mu);
  auto n = impl_->lookup(path);
  if (!n || n->is_dir) throw StorageError("file_size: no such file: " + path);
  return n->data->size();
}

void SimFs::mkdir_all(const std::string& path) {
  std::lock_guard lock(impl_->mu);
  auto cur = impl_->root;
  for (const auto& part : split_path(path)) {
    auto it = cur->children.find(part);
    if (it == cur->children.end()) {
      auto d = Node::make_dir();
      cur->children[part] = d;
      cur = d;
    } else {
      if (!it->second->is_dir) throw StorageError("mkdir_all: file in the way: " + path);
      cur = it->second;
    }
  }
}

std::unique_ptr<FileWriter> SimFs::create_file(const std::string& path) {
  std::lock_guard lock(impl_->mu);
  std::string leaf;
  auto parent = impl_->parent_of(path, leaf);
  if (!parent) throw StorageError("create_file: parent missing: " + path);
  auto it = parent->children.find(leaf);
  if (it != parent->children.end()) {
    if (it->second->is_dir) throw StorageError("create_file: is a directory: " + path);
    // truncate: fresh buffer, durable snapshot untouched
    it->second->data = std::make_shared<Buffer>();
    return std::make_unique<SimFileWriter>(impl_.get(), it->second);
  }
  auto node = Node::make_file();
  parent->children[leaf] = node;
  return std::make_unique<SimFileWriter>(impl_.get(), node);
}

std::unique_ptr<FileReader> SimFs::open_file(const std::string& path) const {
  std::lock_guard lock(impl_->mu);
  auto n = impl_->lookup(path);
  if (!n || n->is_dir) throw StorageError("open_file: no such file: " + path);
  return std::make_unique<SimFileReader>(n->data);
}

std::vector<std::string> SimFs::list_dir(const std::string& path) const {
  std::lock_guard lock(impl_->mu);
  auto n = impl_->lookup(path);
  if (!n || !n->is_dir) throw StorageError("list_dir: no such directory: " + path);
  std::vector<std::string> names;
  names.reserve(n->children.size());
  for (const auto& [name, child] : n->children) names.push_back(name);
  return names;
}

void SimFs::remove_file(const std::string& path) {
  std::lock_guard lock(impl_->mu);
  std::string leaf;
  auto parent = impl_->parent_of(path, leaf);
  auto it = parent ? parent->children.find(leaf) : decltype(parent->children.end())();
  if (!parent || it == parent->children.end() || it->second->is_dir)
    throw StorageError("remove_file: no such file: " + path);
  parent->children.erase(it);
}

void SimFs::remove_dir(const std::string& path) {
  std::lock_guard lock(impl_->mu);
  std::string leaf;
  auto parent = impl_->parent_of(path, leaf);
  auto it = parent ? parent->children.find(leaf) : decltype(parent->children.end())();
  if (!parent || it == parent->children.end() || !it->second->is_dir)
    throw StorageError("remove_dir: no such directory: " + path);
  if (!it->second->children.empty()) throw StorageError("remove_dir: not empty: " + path);
  parent->children.erase(it);
}

void SimFs::rename(const std::string& from, const std::string& to) {
  std::lock_guard lock(impl_->mu);
  std::string from_leaf, to_leaf;
  auto from_parent = impl_->parent_of(from, from_leaf);
  auto to_parent = impl_->parent_of(to, to_leaf);
  if (!from_parent || !to_parent) throw StorageError("rename: missing parent");
  auto it = from_parent->children.find(from_leaf);
  if (it == from_parent->children.end()) throw StorageError("rename: no such entry: " + from);
  if (to_parent->children.count(to_leaf)) throw StorageError("rename: target exists: " + to);
  auto node = it->second;
  from_parent->children.erase(it);
  to_parent->children[to_leaf] = node;
}

void SimFs::flush_dir(const std::string& path) {
  std::lock_guard lock(impl_->mu);
  if (!impl_->lookup(path)) throw StorageError("flush_dir: no such directory: " + path);
}

Digest SimFs::digest_file(const std::string& path) const {
  BufferPtr data;
  {
    std::lock_guard lock(impl_->mu);
    auto n = impl_->lookup(path);
    if (!n || n->is_dir) throw StorageError("digest_file: no such file: " + path);
    data = n->data;
  }
  return sha256(std::span<const std::byte>(*data));
}

Digest SimFs::digest_tree(const std::string& path) const {
  std::vector<std::pair<std::string, Digest>> entries;
  auto walk = [&](auto&& self, const std::string& p) -> void {
    if (is_dir(p)) {
      for (const auto& name : list_dir(p)) self(self, p + "/" + name);
    } else {
      entries.emplace_back(p, digest_file(p));
    }
  };
  if (exists(path)) walk(walk, path);
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Hasher h;
  for (const auto& [p, d] : entries) {
    h.update(std::as_bytes(std::span(p.data(), p.size())));
    h.update(std::as_bytes(std::span(d.bytes)));
  }
  return h.finish();
}

}  // namespace genckpt
