#include "genckpt/fs.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <system_error>

#include "genckpt/errors.hpp"

namespace genckpt {

namespace stdfs = std::filesystem;

void FileSystem::write_file(const std::string& path, std::span<const std::byte> content) {
  auto w = create_file(path);
  if (!content.empty()) w->write(content);
  w->flush();
  w->close();
}

void FileSystem::write_file(const std::string& path, std::string_view content) {
  write_file(path, std::as_bytes(std::span(content.data(), content.size())));
}

std::vector<std::byte> FileSystem::read_all(const std::string& path) const {
  auto r = open_file(path);
  std::vector<std::byte> out;
  std::byte buf[64 * 1024];
  while (std::size_t n = r->read(buf)) out.insert(out.end(), buf, buf + n);
  return out;
}

std::string FileSystem::read_all_text(const std::string& path) const {
  auto bytes = read_all(path);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void FileSystem::remove_tree(const std::string& path) {
  if (!exists(path)) return;
  if (!is_dir(path)) {
    remove_file(path);
    return;
  }
  for (const auto& name : list_dir(path)) remove_tree(path + "/" + name);
  remove_dir(path);
}

Digest FileSystem::digest_file(const std::string& path) const {
  auto r = open_file(path);
  Hasher h;
  std::byte buf[256 * 1024];
  while (std::size_t n = r->read(buf)) h.update(std::span(buf, n));
  return h.finish();
}

namespace {

class RealFileWriter final : public FileWriter {
 public:
  RealFileWriter(const std::string& path, int fd) : path_(path), fd_(fd) {}
  ~RealFileWriter() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void write(std::span<const std::byte> chunk) override {
    const auto* p = reinterpret_cast<const char*>(chunk.data());
    std::size_t left = chunk.size();
    while (left > 0) {
      ssize_t n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw StorageError("write failed for " + path_ + ": " + std::strerror(errno));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
      written_ += static_cast<std::uint64_t>(n);
    }
  }

  void flush() override {
    if (::fsync(fd_) != 0)
      throw StorageError("fsync failed for " + path_ + ": " + std::strerror(errno));
  }

  void close() override {
    if (fd_ >= 0 && ::close(fd_) != 0) {
      fd_ = -1;
      throw StorageError("close failed for " + path_);
    }
    fd_ = -1;
  }

  std::uint64_t bytes_written() const override { return written_; }

 private:
  std::string path_;
  int fd_;
  std::uint64_t written_ = 0;
};

class RealFileReader final : public FileReader {
 public:
  RealFileReader(const std::string& path, int fd) : path_(path), fd_(fd) {}
  ~RealFileReader() override {
    if (fd_ >= 0) ::close(fd_);
  }

  std::size_t read(std::span<std::byte> out) override {
    while (true) {
      ssize_t n = ::read(fd_, out.data(), out.size());
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno != EINTR) throw StorageError("read failed for " + path_);
    }
  }

 private:
  std::string path_;
  int fd_;
};

}  // namespace

bool RealFs::exists(const std::string& path) const {
  std::error_code ec;
  return stdfs::exists(path, ec);
}

bool RealFs::is_dir(const std::string& path) const {
  std::error_code ec;
  return stdfs::is_directory(path, ec);
}

std::uint64_t RealFs::file_size(const std::string& path) const {
  std::error_code ec;
  auto n = stdfs::file_size(path, ec);
  if (ec) throw StorageError("file_size failed for " + path + ": " + ec.message());
  return n;
}

void RealFs::mkdir_all(const std::string& path) {
  std::error_code ec;
  stdfs::create_directories(path, ec);
  if (ec) throw StorageError("mkdir failed for " + path + ": " + ec.message());
}

std::unique_ptr<FileWriter> RealFs::create_file(const std::string& path) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw StorageError("open for write failed: " + path + ": " + std::strerror(errno));
  return std::make_unique<RealFileWriter>(path, fd);
}

std::unique_ptr<FileReader> RealFs::open_file(const std::string& path) const {
  int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) throw StorageError("open for read failed: " + path + ": " + std::strerror(errno));
  return std::make_unique<RealFileReader>(path, fd);
}

std::vector<std::string> RealFs::list_dir(const std::string& path) const {
  std::error_code ec;
  std::vector<std::string> names;
  for (auto it = stdfs::directory_iterator(path, ec); !ec && it != stdfs::directory_iterator();
       it.increment(ec)) {
    names.push_back(it->path().filename().string());
  }
  if (ec) throw StorageError("list_dir failed for " + path + ": " + ec.message());
  std::sort(names.begin(), names.end());
  return names;
}

void RealFs::remove_file(const std::string& path) {
  std::error_code ec;
  if (!stdfs::remove(path, ec) || ec) throw StorageError("remove_file failed for " + path);
}

void RealFs::remove_dir(const std::string& path) {
  std::error_code ec;
  if (!stdfs::remove(path, ec) || ec) throw StorageError("remove_dir failed for " + path);
}

void RealFs::rename(const std::string& from, const std::string& to) {
  std::error_code ec;
  stdfs::rename(from, to, ec);
  if (ec) throw StorageError("rename failed " + from + " -> " + to + ": " + ec.message());
}

void RealFs::flush_dir(const std::string& path) {
  int fd = ::open(path.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) throw StorageError("open dir failed: " + path);
  int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw StorageError("fsync dir failed: " + path);
}

}  // namespace genckpt
