#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "genckpt/bandwidth.hpp"
#include "genckpt/clock.hpp"
#include "genckpt/digest.hpp"

namespace genckpt {

class FileWriter {
 public:
  virtual ~FileWriter() = default;
  /// Size hint for callers that know the final length up front.
  virtual void reserve(std::uint64_t) {}
  virtual void write(std::span<const std::byte> chunk) = 0;
  /// Durability point: bytes written so far survive a power-style crash.
  virtual void flush() = 0;
  virtual void close() = 0;
  virtual std::uint64_t bytes_written() const = 0;
};

class FileReader {
 public:
  virtual ~FileReader() = default;
  /// Fills `out`, returns bytes read; 0 means end of file.
  virtual std::size_t read(std::span<std::byte> out) = 0;
};

/// Minimal filesystem surface the store and workload run on. Two
/// implementations: RealFs (the host filesystem) and SimFs (in-memory,
/// with crash semantics and optional bandwidth-model time accounting).
class FileSystem {
 public:
  virtual ~FileSystem() = default;

  virtual bool exists(const std::string& path) const = 0;
  virtual bool is_dir(const std::string& path) const = 0;
  virtual std::uint64_t file_size(const std::string& path) const = 0;
  virtual void mkdir_all(const std::string& path) = 0;
  /// Creates (or truncates) a file for writing.
  virtual std::unique_ptr<FileWriter> create_file(const std::string& path) = 0;
  virtual std::unique_ptr<FileReader> open_file(const std::string& path) const = 0;
  /// Entry names (not paths), sorted.
  virtual std::vector<std::string> list_dir(const std::string& path) const = 0;
  virtual void remove_file(const std::string& path) = 0;
  /// Removes an empty directory.
  virtual void remove_dir(const std::string& path) = 0;
  /// Atomic rename of a file or directory tree.
  virtual void rename(const std::string& from, const std::string& to) = 0;
  virtual void flush_dir(const std::string& path) = 0;

  // Conveniences built on the virtual surface.
  void write_file(const std::string& path, std::span<const std::byte> content);
  void write_file(const std::string& path, std::string_view content);
  std::vector<std::byte> read_all(const std::string& path) const;
  std::string read_all_text(const std::string& path) const;
  void remove_tree(const std::string& path);
  virtual Digest digest_file(const std::string& path) const;
};

/// Host filesystem; flush maps to fsync.
class RealFs final : public FileSystem {
 public:
  bool exists(const std::string& path) const override;
  bool is_dir(const std::string& path) const override;
  std::uint64_t file_size(const std::string& path) const override;
  void mkdir_all(const std::string& path) override;
  std::unique_ptr<FileWriter> create_file(const std::string& path) override;
  std::unique_ptr<FileReader> open_file(const std::string& path) const override;
  std::vector<std::string> list_dir(const std::string& path) const override;
  void remove_file(const std::string& path) override;
  void remove_dir(const std::string& path) override;
  void rename(const std::string& from, const std::string& to) override;
  void flush_dir(const std::string& path) override;
};

/// In-memory filesystem for tests and the fault harness.
///
/// Crash model: metadata operations (create, remove, rename) are treated as
/// journaled and durable once they return. File content is durable only up
/// to the last flush. `crash_kill` keeps everything written (a process kill
/// leaves the page cache intact); `crash_power` additionally drops unflushed
/// content and files never flushed at all.
///
/// Cloning shares content buffers copy-on-write, so seeding many trial
/// stores from one template is cheap.
class SimFs final : public FileSystem {
 public:
  SimFs();
  ~SimFs() override;
  SimFs(const SimFs&) = delete;
  SimFs& operator=(const SimFs&) = delete;

  /// Charge write time to `clock` according to `bw`.
  void attach_bandwidth(VirtualClock* clock, BandwidthModel bw);

  std::unique_ptr<SimFs> clone() const;
  std::unique_ptr<SimFs> crash_kill() const;
  std::unique_ptr<SimFs> crash_power() const;

  bool exists(const std::string& path) const override;
  bool is_dir(const std::string& path) const override;
  std::uint64_t file_size(const std::string& path) const override;
  void mkdir_all(const std::string& path) override;
  std::unique_ptr<FileWriter> create_file(const std::string& path) override;
  std::unique_ptr<FileReader> open_file(const std::string& path) const override;
  std::vector<std::string> list_dir(const std::string& path) const override;
  void remove_file(const std::string& path) override;
  void remove_dir(const std::string& path) override;
  void rename(const std::string& from, const std::string& to) override;
  void flush_dir(const std::string& path) override;
  Digest digest_file(const std::string& path) const override;

  /// Digest over every file under `path` (path + content), order-independent
  /// identity for whole-tree comparisons.
  Digest digest_tree(const std::string& path) const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
  explicit SimFs(std::unique_ptr<Impl> impl);
};

}  // namespace genckpt
