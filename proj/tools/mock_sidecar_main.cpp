// Reference sidecar: speaks protocol v1 on stdio, or on a socket with --listen.

#include "modelzip/bridge/mock_sidecar.hpp"
#include "modelzip/error.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstring>
#include <iostream>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

namespace {

int listen_on(const std::string& where) {
    if (where.rfind("unix:", 0) == 0) {
        const std::string path = where.substr(5);
        sockaddr_un addr{};
        addr.sun_family = AF_UNIX;
        if (path.size() >= sizeof addr.sun_path) throw modelzip::InvalidArgument("socket path too long");
        std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
        ::unlink(path.c_str());
        const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
        if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 4) != 0)
            throw modelzip::TransportError("cannot listen on " + where + ": " + std::strerror(errno));
        return fd;
    }
    if (where.rfind("tcp:", 0) == 0) {
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(static_cast<std::uint16_t>(std::stoi(where.substr(4))));
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 4) != 0)
            throw modelzip::TransportError("cannot listen on " + where + ": " + std::strerror(errno));
        return fd;
    }
    throw modelzip::InvalidArgument("--listen takes unix:PATH or tcp:PORT");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reference protocol v1 sidecar backed by a built-in byte model", "modelzip_mock_sidecar"};
    std::string spec = "uniform";
    std::string listen;
    app.add_option("spec", spec, "<kind>[,vocab=N][,offset=K][,no-byte-map][,lossy][,context=N][,bos]");
    app.add_option("--listen", listen, "Serve connections on unix:PATH or tcp:PORT instead of stdio");
    CLI11_PARSE(app, argc, argv);
    std::signal(SIGPIPE, SIG_IGN);
    try {
        const auto config = modelzip::bridge::parse_mock_config(spec);
        if (listen.empty()) {
            modelzip::bridge::MockSidecar sidecar(config);
            sidecar.serve(STDIN_FILENO, STDOUT_FILENO);
            return 0;
        }
        const int server = listen_on(listen);
        // Connections are served concurrently, one child process each.
        std::signal(SIGCHLD, SIG_IGN);
        for (;;) {
            const int client = ::accept(server, nullptr, nullptr);
            if (client < 0) continue;
            const pid_t child = ::fork();
            if (child == 0) {
                ::close(server);
                modelzip::bridge::MockSidecar sidecar(config);
                sidecar.serve(client, client);
                ::close(client);
                ::_exit(0);
            }
            ::close(client);
        }
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "sidecar"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
}
