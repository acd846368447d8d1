#pragma once

// Ordered byte streams for the protocol: an in-memory pipe pair and a
// loopback TCP binding (POSIX).

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>

#include "wristhap/errors.hpp"

namespace wristhap::transport {

class ByteStream {
 public:
  virtual ~ByteStream() = default;
  /// Returns the bytes read; 0 means nothing available or the peer closed.
  virtual std::size_t read_some(std::span<std::uint8_t> dst) = 0;
  virtual void write_all(std::span<const std::uint8_t> src) = 0;
  virtual bool peer_closed() const = 0;
  virtual void close() = 0;
};

namespace detail {
struct PipeChannel {
  std::mutex mu;
  std::deque<std::uint8_t> bytes;
  bool closed = false;
};
}  // namespace detail

/// One end of an in-memory full-duplex pipe. Reads never block.
class MemoryEndpoint final : public ByteStream {
 public:
  MemoryEndpoint(std::shared_ptr<detail::PipeChannel> in, std::shared_ptr<detail::PipeChannel> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~MemoryEndpoint() override { close(); }

  std::size_t read_some(std::span<std::uint8_t> dst) override {
    std::lock_guard lock(in_->mu);
    std::size_t n = 0;
    while (n < dst.size() && !in_->bytes.empty()) {
      dst[n++] = in_->bytes.front();
      in_->bytes.pop_front();
    }
    return n;
  }

  void write_all(std::span<const std::uint8_t> src) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw IoError("write to closed pipe");
    out_->bytes.insert(out_->bytes.end(), src.begin(), src.end());
  }

  bool peer_closed() const override {
    std::lock_guard lock(in_->mu);
    return in_->closed && in_->bytes.empty();
  }

  void close() override {
    std::lock_guard lock(out_->mu);
    out_->closed = true;
  }

 private:
  std::shared_ptr<detail::PipeChannel> in_;
  std::shared_ptr<detail::PipeChannel> out_;
};

inline std::pair<std::unique_ptr<MemoryEndpoint>, std::unique_ptr<MemoryEndpoint>>
make_memory_pipe() {
  auto a_to_b = std::make_shared<detail::PipeChannel>();
  auto b_to_a = std::make_shared<detail::PipeChannel>();
  return {std::make_unique<MemoryEndpoint>(b_to_a, a_to_b),
          std::make_unique<MemoryEndpoint>(a_to_b, b_to_a)};
}

class TcpStream final : public ByteStream {
 public:
  explicit TcpStream(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream() override { close(); }

  static std::unique_ptr<TcpStream> connect_loopback(std::uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      const int err = errno;
      ::close(fd);
      throw IoError(std::string("connect: ") + std::strerror(err));
    }
    return std::make_unique<TcpStream>(fd);
  }

  /// Waits up to `timeout` for readable data or hang-up.
  bool wait_readable(std::chrono::nanoseconds timeout) const {
    if (fd_ < 0) return false;
    pollfd p{fd_, POLLIN, 0};
    const auto ns = std::max<std::int64_t>(0, timeout.count());
    timespec ts{static_cast<time_t>(ns / 1'000'000'000), static_cast<long>(ns % 1'000'000'000)};
    return ::ppoll(&p, 1, &ts, nullptr) > 0;
  }

  std::size_t read_some(std::span<std::uint8_t> dst) override {
    if (fd_ < 0 || closed_by_peer_) return 0;
    const ssize_t n = ::recv(fd_, dst.data(), dst.size(), MSG_DONTWAIT);
    if (n == 0) {
      closed_by_peer_ = true;
      return 0;
    }
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return 0;
      closed_by_peer_ = true;
      return 0;
    }
    return static_cast<std::size_t>(n);
  }

  void write_all(std::span<const std::uint8_t> src) override {
    std::size_t off = 0;
    while (off < src.size()) {
      const ssize_t n = ::send(fd_, src.data() + off, src.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError(std::string("send: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  bool peer_closed() const override { return closed_by_peer_; }

  void close() override {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
  bool closed_by_peer_ = false;
};

/// Listening socket on 127.0.0.1. Port 0 picks an ephemeral port.
class TcpListener {
 public:
  explicit TcpListener(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(fd_, 8) != 0) {
      const int err = errno;
      ::close(fd_);
      throw IoError("cannot listen on 127.0.0.1:" + std::to_string(port) + ": " +
                    std::strerror(err));
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }

  std::uint16_t port() const { return port_; }

  std::unique_ptr<TcpStream> accept() {
    while (true) {
      const int c = ::accept(fd_, nullptr, nullptr);
      if (c >= 0) return std::make_unique<TcpStream>(c);
      if (errno != EINTR) throw IoError(std::string("accept: ") + std::strerror(errno));
    }
  }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace wristhap::transport
