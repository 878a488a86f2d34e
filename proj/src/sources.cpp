#include "bsn/sources.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

#include <netdb.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

namespace bsn {
namespace {

class FileSource : public ByteSource {
public:
    explicit FileSource(std::string path) : path_(std::move(path)) {}

    void open() override {
        in_.close();
        in_.clear();
        in_.open(path_, std::ios::binary);
        if (!in_) {
            throw SourceError("cannot open " + path_);
        }
    }

    std::size_t read(std::span<std::uint8_t> buf) override {
        in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (in_.bad()) {
            throw SourceError("read error on " + path_);
        }
        return static_cast<std::size_t>(in_.gcount());
    }

    void close() override { in_.close(); }

private:
    std::string path_;
    std::ifstream in_;
};

class TcpSource : public ByteSource {
public:
    explicit TcpSource(const std::string& address) {
        const auto colon = address.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
            throw SourceError("tcp address must be host:port, got '" + address + "'");
        }
        host_ = address.substr(0, colon);
        port_ = address.substr(colon + 1);
    }
    ~TcpSource() override { close(); }

    void open() override {
        close();
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (const int rc = ::getaddrinfo(host_.c_str(), port_.c_str(), &hints, &res); rc != 0) {
            throw SourceError("resolve " + host_ + ": " + ::gai_strerror(rc));
        }
        std::string last_error = "no addresses";
        for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
            const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) {
                last_error = std::strerror(errno);
                continue;
            }
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
                fd_ = fd;
                break;
            }
            last_error = std::strerror(errno);
            ::close(fd);
        }
        ::freeaddrinfo(res);
        if (fd_ < 0) {
            throw SourceError("connect " + host_ + ":" + port_ + ": " + last_error);
        }
    }

    std::size_t read(std::span<std::uint8_t> buf) override {
        if (fd_ < 0) {
            throw SourceError("not connected");
        }
        for (;;) {
            const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
            if (n >= 0) {
                return static_cast<std::size_t>(n);
            }
            if (errno != EINTR) {
                throw SourceError(std::string("recv: ") + std::strerror(errno));
            }
        }
    }

    void close() override {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    std::string host_;
    std::string port_;
    int fd_ = -1;
};

}  // namespace

const char* to_string(SourceKind k) { return k == SourceKind::file ? "file" : "tcp"; }
const char* to_string(Protocol p) { return p == Protocol::hxm ? "hxm" : "shimmer"; }

std::optional<SourceKind> source_kind_from_string(const std::string& s) {
    if (s == "file") return SourceKind::file;
    if (s == "tcp") return SourceKind::tcp;
    return std::nullopt;
}

std::optional<Protocol> protocol_from_string(const std::string& s) {
    if (s == "hxm") return Protocol::hxm;
    if (s == "shimmer") return Protocol::shimmer;
    return std::nullopt;
}

std::optional<std::uint32_t> reconnect_delay_ms(const SourceConfig& cfg, std::uint32_t attempt) {
    if (attempt == 0 || attempt > cfg.reconnect_max_attempts) {
        return std::nullopt;
    }
    std::uint64_t delay = cfg.reconnect_backoff_ms;
    for (std::uint32_t i = 1; i < attempt && delay < kMaxReconnectDelayMs; ++i) {
        delay *= 2;
    }
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(delay, kMaxReconnectDelayMs));
}

std::unique_ptr<ByteSource> make_source(const SourceConfig& cfg) {
    if (cfg.reconnect_backoff_ms == 0) {
        throw SourceError("reconnect backoff must be positive");
    }
    if (cfg.kind == SourceKind::file) {
        return std::make_unique<FileSource>(cfg.address);
    }
    return std::make_unique<TcpSource>(cfg.address);
}

}  // namespace bsn
