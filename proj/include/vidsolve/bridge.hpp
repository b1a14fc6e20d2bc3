// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Denoiser wire protocol and the client that drives a bridge process over
// its stdin/stdout. All integers and floats are little-endian.
//
//   handshake  client -> "HELO" u32 version      server -> "HELO" u32 version
//   EPS-REQ    "EPQ1" u32 t_index f64 abar u32 N u32 C u32 H u32 W f32[N*C*H*W]
//   EPS-RSP    "EPR1" u32 status
//                status == 0: u32 N u32 C u32 H u32 W f32[N*C*H*W]
//                status != 0: u32 length, UTF-8 message of that many bytes

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "io.hpp"

namespace vidsolve {

inline constexpr std::uint32_t kProtocolVersion = 1;

namespace wire {

inline std::vector<unsigned char> encode_hello(std::uint32_t version) {
    std::vector<unsigned char> buf{'H', 'E', 'L', 'O'};
    le::put_u32(buf, version);
    return buf;
}

inline std::vector<unsigned char> encode_request(const Video& x, std::uint32_t t_index, double abar) {
    std::vector<unsigned char> buf{'E', 'P', 'Q', '1'};
    buf.reserve(32 + 4 * x.size());
    le::put_u32(buf, t_index);
    le::put_f64(buf, abar);
    for (std::size_t d : {x.frames(), x.channels(), x.height(), x.width()}) le::put_u32(buf, static_cast<std::uint32_t>(d));
    for (float v : x.data()) le::put_f32(buf, v);
    return buf;
}

inline std::vector<unsigned char> encode_response(const Video& eps) {
    std::vector<unsigned char> buf{'E', 'P', 'R', '1'};
    le::put_u32(buf, 0);
    for (std::size_t d : {eps.frames(), eps.channels(), eps.height(), eps.width()})
        le::put_u32(buf, static_cast<std::uint32_t>(d));
    for (float v : eps.data()) le::put_f32(buf, v);
    return buf;
}

inline std::vector<unsigned char> encode_error_response(std::uint32_t status, const std::string& message) {
    std::vector<unsigned char> buf{'E', 'P', 'R', '1'};
    le::put_u32(buf, status);
    le::put_u32(buf, static_cast<std::uint32_t>(message.size()));
    buf.insert(buf.end(), message.begin(), message.end());
    return buf;
}

}  // namespace wire

/// Owns a bridge child process. One request is in flight at a time; every
/// read and write is bounded by the configured timeout.
class BridgeClient {
public:
    using Clock = std::chrono::steady_clock;

    /// Spawns `/bin/sh -c command` and performs the handshake.
    explicit BridgeClient(const std::string& command, std::chrono::milliseconds timeout = std::chrono::seconds(5))
        : timeout_(timeout) {
        std::signal(SIGPIPE, SIG_IGN);
        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0) fail(ErrorCode::PeerClosed, "pipe: " + std::string(std::strerror(errno)));
        if (::pipe(from_child) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            fail(ErrorCode::PeerClosed, "pipe: " + std::string(std::strerror(errno)));
        }
        pid_ = ::fork();
        if (pid_ < 0) fail(ErrorCode::PeerClosed, "fork: " + std::string(std::strerror(errno)));
        if (pid_ == 0) {
            ::setpgid(0, 0);
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::setpgid(pid_, pid_);
        ::close(to_child[0]);
        ::close(from_child[1]);
        write_fd_ = to_child[1];
        read_fd_ = from_child[0];
        ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
        ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
        ::fcntl(write_fd_, F_SETFL, ::fcntl(write_fd_, F_GETFL) | O_NONBLOCK);
        try {
            handshake();
        } catch (...) {
            shutdown();
            throw;
        }
    }

    BridgeClient(const BridgeClient&) = delete;
    BridgeClient& operator=(const BridgeClient&) = delete;

    ~BridgeClient() { shutdown(); }

    pid_t pid() const noexcept { return pid_; }

    Video predict(const Video& x_t, std::uint32_t t_index, double abar) {
        const auto deadline = Clock::now() + timeout_;
        write_all(wire::encode_request(x_t, t_index, abar), deadline);

        unsigned char head[8];
        read_exact(head, sizeof(head), deadline);
        if (std::memcmp(head, "EPR1", 4) != 0) fail(ErrorCode::ExternalProtocolError, "bad response magic");
        const std::uint32_t status = le::get_u32(head + 4);
        if (status != 0) {
            unsigned char len_buf[4];
            read_exact(len_buf, 4, deadline);
            const std::uint32_t len = le::get_u32(len_buf);
            if (len > (1u << 20)) fail(ErrorCode::ExternalProtocolError, "oversized error message");
            std::string msg(len, '\0');
            read_exact(reinterpret_cast<unsigned char*>(msg.data()), len, deadline);
            fail(ErrorCode::ExternalProtocolError, "bridge status " + std::to_string(status) + ": " + msg);
        }
        unsigned char dims_buf[16];
        read_exact(dims_buf, sizeof(dims_buf), deadline);
        Shape s{le::get_u32(dims_buf), le::get_u32(dims_buf + 4), le::get_u32(dims_buf + 8), le::get_u32(dims_buf + 12)};
        if (!(s == x_t.shape())) {
            broken_ = true;
            throw Error(ErrorCode::ShapeMismatch,
                        "bridge returned " + to_string(s) + " for request " + to_string(x_t.shape()), true);
        }
        std::vector<unsigned char> payload(4 * s.size());
        read_exact(payload.data(), payload.size(), deadline);
        std::vector<float> data(s.size());
        for (std::size_t i = 0; i < data.size(); ++i) data[i] = le::get_f32(payload.data() + 4 * i);
        return Video(s, std::move(data));
    }

    /// Closes the pipes and reaps the child, killing it if it lingers.
    void shutdown() noexcept {
        if (write_fd_ >= 0) ::close(write_fd_);
        if (read_fd_ >= 0) ::close(read_fd_);
        write_fd_ = read_fd_ = -1;
        if (pid_ > 0) {
            int status = 0;
            for (int i = 0; i < 20; ++i) {
                if (::waitpid(pid_, &status, WNOHANG) != 0) {
                    pid_ = -1;
                    return;
                }
                ::usleep(5000);
            }
            ::kill(-pid_, SIGKILL);
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
            pid_ = -1;
        }
    }

private:
    void handshake() {
        const auto deadline = Clock::now() + timeout_;
        write_all(wire::encode_hello(kProtocolVersion), deadline);
        unsigned char reply[8];
        read_exact(reply, sizeof(reply), deadline);
        if (std::memcmp(reply, "HELO", 4) != 0) fail(ErrorCode::ExternalProtocolError, "bad handshake reply");
        const std::uint32_t v = le::get_u32(reply + 4);
        if (v != kProtocolVersion)
            fail(ErrorCode::ProtocolVersionMismatch, "bridge speaks version " + std::to_string(v));
    }

    int remaining_ms(Clock::time_point deadline) const {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        return left > 0 ? static_cast<int>(left) : 0;
    }

    void write_all(const std::vector<unsigned char>& buf, Clock::time_point deadline) {
        if (broken_ || write_fd_ < 0) fail(ErrorCode::PeerClosed, "bridge connection is closed");
        std::size_t done = 0;
        while (done < buf.size()) {
            pollfd pfd{write_fd_, POLLOUT, 0};
            const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
            if (rc == 0) {
                broken_ = true;
                fail(ErrorCode::Timeout, "bridge did not accept request in time");
            }
            if (rc < 0) {
                if (errno == EINTR) continue;
                broken_ = true;
                fail(ErrorCode::PeerClosed, "poll: " + std::string(std::strerror(errno)));
            }
            const ssize_t n = ::write(write_fd_, buf.data() + done, buf.size() - done);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                broken_ = true;
                fail(ErrorCode::PeerClosed, "write to bridge: " + std::string(std::strerror(errno)));
            }
            done += static_cast<std::size_t>(n);
        }
    }

    void read_exact(unsigned char* out, std::size_t len, Clock::time_point deadline) {
        if (broken_ || read_fd_ < 0) fail(ErrorCode::PeerClosed, "bridge connection is closed");
        std::size_t done = 0;
        while (done < len) {
            pollfd pfd{read_fd_, POLLIN, 0};
            const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
            if (rc == 0) {
                broken_ = true;
                fail(ErrorCode::Timeout, "no reply from bridge within " + std::to_string(timeout_.count()) + " ms");
            }
            if (rc < 0) {
                if (errno == EINTR) continue;
                broken_ = true;
                fail(ErrorCode::PeerClosed, "poll: " + std::string(std::strerror(errno)));
            }
            const ssize_t n = ::read(read_fd_, out + done, len - done);
            if (n == 0) {
                broken_ = true;
                fail(ErrorCode::PeerClosed, "bridge closed its output");
            }
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                broken_ = true;
                fail(ErrorCode::PeerClosed, "read from bridge: " + std::string(std::strerror(errno)));
            }
            done += static_cast<std::size_t>(n);
        }
    }

    std::chrono::milliseconds timeout_;
    pid_t pid_ = -1;
    int write_fd_ = -1;
    int read_fd_ = -1;
    bool broken_ = false;
};

}  // namespace vidsolve
