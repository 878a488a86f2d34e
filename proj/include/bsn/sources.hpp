#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace bsn {

enum class SourceKind { file, tcp };
enum class Protocol { hxm, shimmer };

const char* to_string(SourceKind k);
const char* to_string(Protocol p);
std::optional<SourceKind> source_kind_from_string(const std::string& s);
std::optional<Protocol> protocol_from_string(const std::string& s);

/// A sensor link. Bluetooth serial links are stood in for by ordered byte
/// streams: a file read start to finish, or a TCP connection.
struct SourceConfig {
    SourceKind kind = SourceKind::file;
    std::string address;  // path, or host:port
    Protocol protocol = Protocol::hxm;
    std::uint32_t reconnect_max_attempts = 3;
    std::uint32_t reconnect_backoff_ms = 500;
};

inline constexpr std::uint32_t kMaxReconnectDelayMs = 30000;

/// Delay before reconnect attempt `attempt` (1-based): backoff doubled per
/// attempt, capped at 30 s. Empty once attempts are exhausted.
std::optional<std::uint32_t> reconnect_delay_ms(const SourceConfig& cfg, std::uint32_t attempt);

class SourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ByteSource {
public:
    virtual ~ByteSource() = default;
    /// Throws SourceError when the link cannot be established.
    virtual void open() = 0;
    /// Blocks for data. 0 means the stream ended cleanly; SourceError means
    /// the link dropped and may be reopened.
    virtual std::size_t read(std::span<std::uint8_t> buf) = 0;
    virtual void close() = 0;
};

std::unique_ptr<ByteSource> make_source(const SourceConfig& cfg);

}  // namespace bsn
