#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "genckpt/errors.hpp"
#include "genckpt/fs.hpp"

namespace genckpt {

/// Chunked byte source fed to the store when staging images and precious
/// files. Sources are resettable so callers may retry after abort.
class ContentSource {
 public:
  virtual ~ContentSource() = default;
  virtual std::uint64_t size() const = 0;
  /// Next chunk; empty span means end of stream.
  virtual std::span<const std::byte> next_chunk() = 0;
  virtual void reset() = 0;
  /// Digest of the full stream if the producer already knows it; lets the
  /// store skip the re-read hash after a complete write.
  virtual std::optional<Digest> known_digest() const { return std::nullopt; }
};

class SpanSource final : public ContentSource {
 public:
  explicit SpanSource(std::span<const std::byte> data, std::size_t chunk_size = 4 << 20)
      : data_(data), chunk_(chunk_size) {}

  SpanSource(std::span<const std::byte> data, Digest digest)
      : data_(data), chunk_(4 << 20), known_(digest) {}

  std::uint64_t size() const override { return data_.size(); }

  std::span<const std::byte> next_chunk() override {
    std::size_t n = std::min(chunk_, data_.size() - pos_);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  void reset() override { pos_ = 0; }

  std::optional<Digest> known_digest() const override { return known_; }

 private:
  std::span<const std::byte> data_;
  std::size_t chunk_;
  std::size_t pos_ = 0;
  std::optional<Digest> known_;
};

/// Streams an existing file through a fixed buffer.
class FsFileSource final : public ContentSource {
 public:
  FsFileSource(const FileSystem& fs, std::string path)
      : fs_(fs), path_(std::move(path)), size_(fs.file_size(path_)), buf_(256 * 1024) {
    reader_ = fs_.open_file(path_);
  }

  std::uint64_t size() const override { return size_; }

  std::span<const std::byte> next_chunk() override {
    std::size_t n = reader_->read(buf_);
    return std::span<const std::byte>(buf_.data(), n);
  }

  void reset() override { reader_ = fs_.open_file(path_); }

 private:
  const FileSystem& fs_;
  std::string path_;
  std::uint64_t size_;
  std::vector<std::byte> buf_;
  std::unique_ptr<FileReader> reader_;
};

/// Wrapper that delivers the inner stream up to `crash_offset` bytes and
/// then raises InjectedCrash, leaving a partial write behind.
class CrashAtOffsetSource final : public ContentSource {
 public:
  CrashAtOffsetSource(ContentSource& inner, std::uint64_t crash_offset, std::string point)
      : inner_(inner), crash_offset_(crash_offset), point_(std::move(point)) {}

  std::uint64_t size() const override { return inner_.size(); }

  std::span<const std::byte> next_chunk() override {
    if (delivered_ >= crash_offset_) throw InjectedCrash(point_);
    auto chunk = inner_.next_chunk();
    if (delivered_ + chunk.size() > crash_offset_)
      chunk = chunk.subspan(0, static_cast<std::size_t>(crash_offset_ - delivered_));
    delivered_ += chunk.size();
    if (chunk.empty()) throw InjectedCrash(point_);
    return chunk;
  }

  void reset() override {
    inner_.reset();
    delivered_ = 0;
  }

 private:
  ContentSource& inner_;
  std::uint64_t crash_offset_;
  std::string point_;
  std::uint64_t delivered_ = 0;
};

/// Deterministic pseudo-random content for tests and the workload; the
/// stream depends only on (seed, tag, size).
std::vector<std::byte> pattern_bytes(std::uint64_t seed, std::string_view tag, std::size_t size);

}  // namespace genckpt
