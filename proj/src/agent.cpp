#include "genckpt/agent.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "genckpt/errors.hpp"

namespace genckpt {

namespace {

constexpr char kMagic[4] = {'G', 'C', 'K', 'I'};
constexpr std::uint8_t kVersion = 1;

void append_u32(std::vector<std::byte>& out, std::uint32_t v) {
  std::byte b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}

void append_u64(std::vector<std::byte>& out, std::uint64_t v) {
  std::byte b[8];
  std::memcpy(b, &v, 8);
  out.insert(out.end(), b, b + 8);
}

class ImageCursor {
 public:
  explicit ImageCursor(std::span<const std::byte> data) : data_(data) {}

  std::span<const std::byte> take(std::size_t n) {
    if (pos_ + n > data_.size()) throw ImageFormatError("truncated image");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t take_u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
  }

  std::uint64_t take_u64() {
    std::uint64_t v;
    std::memcpy(&v, take(8).data(), 8);
    return v;
  }

  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

std::vector<Digest> digest_sections(std::span<const SectionView> sections) {
  std::vector<Digest> out;
  out.reserve(sections.size());
  for (const auto& s : sections) out.push_back(sha256(s.bytes));
  return out;
}

}  // namespace

std::uint64_t snapshot_footprint(std::span<const SectionView> sections) {
  std::uint64_t n = 4 + 1 + 4;  // magic, version, count
  for (const auto& s : sections) n += 4 + s.name.size() + 1 + 8 + s.bytes.size();
  return n + 32;  // digest trailer
}

std::vector<std::byte> snapshot_state(std::span<const SectionView> sections,
                                      const SnapshotOptions& options) {
  {
    std::set<std::string> names;
    for (const auto& s : sections)
      if (!names.insert(s.name).second)
        throw std::invalid_argument("duplicate section name: " + s.name);
  }

  auto pre = digest_sections(sections);
  if (options.between_passes) options.between_passes();

  std::vector<std::byte> out;
  out.reserve(static_cast<std::size_t>(snapshot_footprint(sections)));
  out.insert(out.end(), reinterpret_cast<const std::byte*>(kMagic),
             reinterpret_cast<const std::byte*>(kMagic) + 4);
  out.push_back(std::byte{kVersion});
  append_u32(out, static_cast<std::uint32_t>(sections.size()));
  for (const auto& s : sections) {
    append_u32(out, static_cast<std::uint32_t>(s.name.size()));
    out.insert(out.end(), reinterpret_cast<const std::byte*>(s.name.data()),
               reinterpret_cast<const std::byte*>(s.name.data()) + s.name.size());
    out.push_back(static_cast<std::byte>(s.kind));
    append_u64(out, s.bytes.size());
    out.insert(out.end(), s.bytes.begin(), s.bytes.end());
  }

  auto post = digest_sections(sections);
  for (std::size_t i = 0; i < sections.size(); ++i)
    if (!(pre[i] == post[i]))
      throw SnapshotRace("section mutated during snapshot: " + sections[i].name);

  Digest trailer = sha256(std::span<const std::byte>(out));
  out.insert(out.end(), reinterpret_cast<const std::byte*>(trailer.bytes.data()),
             reinterpret_cast<const std::byte*>(trailer.bytes.data()) + 32);
  return out;
}

std::vector<StateSection> restore_state(std::span<const std::byte> image) {
  if (image.size() < 4 + 1 + 4 + 32) throw ImageFormatError("image too small");
  Digest recorded;
  std::memcpy(recorded.bytes.data(), image.data() + image.size() - 32, 32);
  auto body = image.subspan(0, image.size() - 32);
  if (!(sha256(body) == recorded)) throw ImageFormatError("image digest mismatch");

  ImageCursor cur(body);
  if (std::memcmp(cur.take(4).data(), kMagic, 4) != 0) throw ImageFormatError("bad magic");
  if (std::to_integer<std::uint8_t>(cur.take(1)[0]) != kVersion)
    throw ImageFormatError("unsupported image version");
  std::uint32_t count = cur.take_u32();

  std::vector<StateSection> sections;
  sections.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    StateSection s;
    std::uint32_t name_len = cur.take_u32();
    auto name = cur.take(name_len);
    s.name.assign(reinterpret_cast<const char*>(name.data()), name_len);
    auto kind = std::to_integer<std::uint8_t>(cur.take(1)[0]);
    if (kind > 1) throw ImageFormatError("bad section kind");
    s.kind = static_cast<SectionKind>(kind);
    std::uint64_t len = cur.take_u64();
    auto bytes = cur.take(static_cast<std::size_t>(len));
    s.bytes.assign(bytes.begin(), bytes.end());
    sections.push_back(std::move(s));
  }
  if (cur.pos() != body.size()) throw ImageFormatError("trailing bytes after sections");
  return sections;
}

FdRange choose_internal_fd_range(const std::set<int>& app_fds, int needed, int max_fd) {
  if (needed < 1) throw FdExhaustion("needed must be positive");
  int candidate = 3;
  for (int fd : app_fds) {
    if (fd < candidate) continue;
    if (fd - candidate >= needed) break;  // gap before this fd is large enough
    candidate = fd + 1;
  }
  if (candidate + needed > max_fd)
    throw FdExhaustion("no descriptor gap of size " + std::to_string(needed) + " below " +
                       std::to_string(max_fd));
  return FdRange{candidate, needed};
}

int OpenFileTracker::open(const std::string& path, const std::string& mode) {
  int fd = next_fd_++;
  open_[fd] = OpenFileInfo{path, fd, mode};
  return fd;
}

void OpenFileTracker::close(int descriptor) { open_.erase(descriptor); }

std::vector<OpenFileInfo> OpenFileTracker::enumerate() const {
  std::vector<OpenFileInfo> out;
  out.reserve(open_.size());
  for (const auto& [fd, info] : open_) out.push_back(info);
  return out;
}

std::set<int> OpenFileTracker::descriptors() const {
  std::set<int> out;
  for (const auto& [fd, info] : open_) out.insert(fd);
  return out;
}

}  // namespace genckpt
