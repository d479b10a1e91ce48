#include "modelzip/bridge/transport.hpp"

#include "modelzip/bridge/mock_sidecar.hpp"
#include "modelzip/error.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

namespace modelzip::bridge {

namespace {

std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

void ignore_sigpipe() {
    static const bool done = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)done;
}

}  // namespace

void LoopbackTransport::send_line(std::string_view line) { replies_.push_back(handler_(line)); }

std::string LoopbackTransport::receive_line() {
    if (replies_.empty()) throw TransportError("loopback: no reply pending");
    std::string r = std::move(replies_.front());
    replies_.pop_front();
    return r;
}

FdTransport::FdTransport(int read_fd, int write_fd, bool owns, std::chrono::milliseconds timeout)
    : read_fd_(read_fd), write_fd_(write_fd), owns_(owns), timeout_(timeout) {
    ignore_sigpipe();
}

FdTransport::~FdTransport() { close_fds(); }

void FdTransport::close_fds() {
    if (!owns_) return;
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    read_fd_ = write_fd_ = -1;
}

void FdTransport::send_line(std::string_view line) {
    if (line.find('\n') != std::string_view::npos) throw TransportError("message contains a newline");
    std::string data(line);
    data += '\n';
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(errno_text("write to sidecar"));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::string FdTransport::receive_line() {
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        pollfd p{read_fd_, POLLIN, 0};
        const int ready = ::poll(&p, 1, static_cast<int>(timeout_.count()));
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw TransportError(errno_text("poll sidecar"));
        }
        if (ready == 0) throw TransportError("sidecar did not reply within " + std::to_string(timeout_.count()) + " ms");
        char buf[65536];
        const ssize_t n = ::read(read_fd_, buf, sizeof buf);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(errno_text("read from sidecar"));
        }
        if (n == 0) throw TransportError("sidecar closed the connection");
        buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

SubprocessTransport::SubprocessTransport(int read_fd, int write_fd, pid_t pid)
    : FdTransport(read_fd, write_fd, true), pid_(pid) {}

std::unique_ptr<SubprocessTransport> SubprocessTransport::spawn(const std::string& command) {
    ignore_sigpipe();
    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw TransportError(errno_text("pipe"));
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw TransportError(errno_text("pipe"));
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError(errno_text("fork"));
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::unique_ptr<SubprocessTransport>(new SubprocessTransport(from_child[0], to_child[1], pid));
}

SubprocessTransport::~SubprocessTransport() {
    // Closing stdin lets a well-behaved sidecar exit on EOF.
    close_fds();
    int status = 0;
    for (int i = 0; i < 200; ++i) {
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_ || r < 0) return;
        ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
}

std::unique_ptr<Transport> connect_tcp(const std::string& host, const std::string& port) {
    ignore_sigpipe();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
        throw TransportError("resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
    int fd = -1;
    for (addrinfo* a = res; a; a = a->ai_next) {
        fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw TransportError("connect tcp:" + host + ":" + port + " failed");
    return std::make_unique<FdTransport>(fd, fd, true);
}

std::unique_ptr<Transport> connect_unix(const std::string& path) {
    ignore_sigpipe();
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof addr.sun_path) throw InvalidArgument("unix socket path too long: " + path);
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw TransportError(errno_text("socket"));
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
        const auto msg = errno_text("connect unix:" + path);
        ::close(fd);
        throw TransportError(msg);
    }
    return std::make_unique<FdTransport>(fd, fd, true);
}

std::unique_ptr<Transport> connect(std::string_view endpoint) {
    const auto colon = endpoint.find(':');
    if (colon == std::string_view::npos)
        throw InvalidArgument("endpoint '" + std::string(endpoint) + "' must start with mock:, exec:, tcp: or unix:");
    const auto scheme = endpoint.substr(0, colon);
    const std::string rest(endpoint.substr(colon + 1));
    if (scheme == "mock") {
        auto sidecar = std::make_shared<MockSidecar>(parse_mock_config(rest));
        return std::make_unique<LoopbackTransport>([sidecar](std::string_view line) { return sidecar->handle(line); });
    }
    if (scheme == "exec") {
        if (rest.empty()) throw InvalidArgument("exec: endpoint needs a command");
        return SubprocessTransport::spawn(rest);
    }
    if (scheme == "tcp") {
        const auto c = rest.rfind(':');
        if (c == std::string::npos || c == 0 || c + 1 == rest.size())
            throw InvalidArgument("tcp endpoint must be tcp:<host>:<port>");
        return connect_tcp(rest.substr(0, c), rest.substr(c + 1));
    }
    if (scheme == "unix") return connect_unix(rest);
    throw InvalidArgument("unknown endpoint scheme '" + std::string(scheme) + "'");
}

}  // namespace modelzip::bridge
