#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <sys/types.h>

namespace modelzip::bridge {

// Ordered, line-oriented duplex channel.
class Transport {
public:
    virtual ~Transport() = default;
    // `line` must not contain '\n'; the terminator is added.
    virtual void send_line(std::string_view line) = 0;
    // Next line without its terminator. Throws TransportError on EOF or timeout.
    virtual std::string receive_line() = 0;
};

// In-process channel to a line handler (the built-in mock sidecar).
class LoopbackTransport final : public Transport {
public:
    using Handler = std::function<std::string(std::string_view)>;
    explicit LoopbackTransport(Handler handler) : handler_(std::move(handler)) {}

    void send_line(std::string_view line) override;
    std::string receive_line() override;

private:
    Handler handler_;
    std::deque<std::string> replies_;
};

// Reads and writes file descriptors. Owned descriptors are closed on destruction.
class FdTransport : public Transport {
public:
    // A negative timeout waits forever.
    FdTransport(int read_fd, int write_fd, bool owns,
                std::chrono::milliseconds timeout = std::chrono::milliseconds(120000));
    ~FdTransport() override;
    FdTransport(const FdTransport&) = delete;
    FdTransport& operator=(const FdTransport&) = delete;

    void send_line(std::string_view line) override;
    std::string receive_line() override;

protected:
    void close_fds();

private:
    int read_fd_;
    int write_fd_;
    bool owns_;
    std::chrono::milliseconds timeout_;
    std::string buffer_;
};

// Child process speaking over its stdin/stdout; `command` runs under /bin/sh.
class SubprocessTransport final : public FdTransport {
public:
    static std::unique_ptr<SubprocessTransport> spawn(const std::string& command);
    ~SubprocessTransport() override;

private:
    SubprocessTransport(int read_fd, int write_fd, pid_t pid);
    pid_t pid_;
};

std::unique_ptr<Transport> connect_tcp(const std::string& host, const std::string& port);
std::unique_ptr<Transport> connect_unix(const std::string& path);

// Endpoint descriptors:
//   mock:<kind>[,option...]   built-in mock sidecar, in process
//   exec:<command>            subprocess over stdio
//   tcp:<host>:<port>         stream socket
//   unix:<path>               Unix-domain stream socket
std::unique_ptr<Transport> connect(std::string_view endpoint);

}  // namespace modelzip::bridge
