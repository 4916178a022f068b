#include "genckpt/channel.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <vector>

#include "genckpt/errors.hpp"

namespace genckpt {

namespace {

struct FrameQueue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<std::byte>> frames;
  bool closed = false;

  void push(std::vector<std::byte> frame) {
    {
      std::lock_guard<std::mutex> lk(mu);
      if (closed) throw ProtocolError("channel closed");
      frames.push_back(std::move(frame));
    }
    cv.notify_one();
  }

  std::optional<std::vector<std::byte>> pop(std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lk(mu);
    if (!cv.wait_for(lk, timeout, [&] { return !frames.empty() || closed; }))
      return std::nullopt;
    if (frames.empty()) throw ProtocolError("peer closed channel");
    auto frame = std::move(frames.front());
    frames.pop_front();
    return frame;
  }

  void close() {
    {
      std::lock_guard<std::mutex> lk(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

class QueueChannel final : public Channel {
 public:
  QueueChannel(std::shared_ptr<FrameQueue> out, std::shared_ptr<FrameQueue> in)
      : out_(std::move(out)), in_(std::move(in)) {}

  ~QueueChannel() override { close(); }

  void send(const Message& msg) override { out_->push(encode_frame(msg)); }

  std::optional<Message> recv(std::chrono::milliseconds timeout) override {
    auto frame = in_->pop(timeout);
    if (!frame) return std::nullopt;
    return decode_frame(*frame);
  }

  void close() override {
    out_->close();
    in_->close();
  }

 private:
  std::shared_ptr<FrameQueue> out_;
  std::shared_ptr<FrameQueue> in_;
};

class SocketChannel final : public Channel {
 public:
  explicit SocketChannel(int fd) : fd_(fd) {}

  ~SocketChannel() override { close(); }

  void send(const Message& msg) override {
    auto frame = encode_frame(msg);
    std::size_t sent = 0;
    while (sent < frame.size()) {
      ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("send: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::optional<Message> recv(std::chrono::milliseconds timeout) override {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    std::array<std::byte, kFrameHeaderSize> header;
    if (!read_exact(header.data(), header.size(), deadline, true)) return std::nullopt;
    auto len = payload_length(std::span<const std::byte, kFrameHeaderSize>(header));
    std::vector<std::byte> frame(header.begin(), header.end());
    frame.resize(kFrameHeaderSize + len);
    // once a header has arrived the payload must follow
    if (!read_exact(frame.data() + kFrameHeaderSize, len, deadline, false))
      throw ProtocolError("timed out mid-frame");
    return decode_frame(frame);
  }

  void close() override {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  // Reads exactly n bytes. If allow_empty_timeout and no byte has arrived
  // yet, a timeout returns false; otherwise a timeout is a protocol error.
  bool read_exact(std::byte* dst, std::size_t n,
                  std::chrono::steady_clock::time_point deadline, bool allow_empty_timeout) {
    std::size_t got = 0;
    while (got < n) {
      auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        if (allow_empty_timeout && got == 0) return false;
        throw ProtocolError("timed out mid-frame");
      }
      struct pollfd pfd{fd_, POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("poll: ") + std::strerror(errno));
      }
      if (rc == 0) continue;
      ssize_t r = ::read(fd_, dst + got, n - got);
      if (r < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("read: ") + std::strerror(errno));
      }
      if (r == 0) throw ProtocolError("peer closed channel");
      got += static_cast<std::size_t>(r);
    }
    return true;
  }

  int fd_;
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_channel_pair() {
  auto a_to_b = std::make_shared<FrameQueue>();
  auto b_to_a = std::make_shared<FrameQueue>();
  return {std::make_unique<QueueChannel>(a_to_b, b_to_a),
          std::make_unique<QueueChannel>(b_to_a, a_to_b)};
}

std::unique_ptr<Channel> make_socket_channel(int fd) {
  return std::make_unique<SocketChannel>(fd);
}

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_socket_channel_pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0)
    throw ProtocolError(std::string("socketpair: ") + std::strerror(errno));
  return {make_socket_channel(fds[0]), make_socket_channel(fds[1])};
}

}  // namespace genckpt
