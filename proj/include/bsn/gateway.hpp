#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsn/emg.hpp"
#include "bsn/framer.hpp"
#include "bsn/kv.hpp"
#include "bsn/records.hpp"
#include "bsn/session.hpp"
#include "bsn/sources.hpp"
#include "bsn/transport.hpp"

namespace bsn {

class GatewayError : public std::runtime_error {
public:
    enum class Kind { config, source_unreachable, upload_failed, rejected, io };
    GatewayError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

enum class UploadMode { manual, periodic };

/// Nothing leaves the gateway in manual mode unless an upload is requested
/// explicitly. Periodic mode uploads each finished session and flushes any
/// earlier sessions whose upload did not complete.
struct UploadPolicy {
    UploadMode mode = UploadMode::manual;
    std::uint32_t period_s = 0;
    std::string endpoint;  // http://host:port of the ingestion service
    std::string auth_token;
};

/// Folds the byte streams of one session into metrics and raw sample rows.
/// Live runs and offline replays share this, so both give the same summary.
/// At most one HxM source; each Shimmer source is one EMG channel, numbered in
/// order of appearance, and a second channel enables the symmetry ratio.
class SessionBuilder {
public:
    explicit SessionBuilder(std::vector<Protocol> protocols, EmgConfig emg = {});

    void feed(std::size_t source, ByteView chunk);
    /// The link of `source` was re-established; a partial frame is dropped.
    void link_reset(std::size_t source);

    /// HxM frames arrive once a second and Shimmer packets at 500 Hz, so the
    /// duration is the longer of the two nominal stream lengths.
    double duration_s() const;
    SessionSummary summary() const;
    /// hr: instantaneous bpm per recovered beat at its offset from the first
    /// message; distance: cumulative metres per message; emg: millivolts.
    std::vector<SampleRow> samples() const;

private:
    struct Stream {
        Protocol protocol = Protocol::hxm;
        std::uint32_t channel = 0;
        FramerState framer;
        std::uint64_t packets = 0;
        std::uint64_t unknown_type = 0;
    };
    std::vector<Stream> streams_;
    EmgConfig emg_config_;
    HxmSessionAccumulator hxm_;
    std::vector<SampleSeries> emg_;  // per channel
};

struct GatewayConfig {
    std::vector<SourceConfig> sources;
    UploadPolicy policy;
    std::string user_id;
    std::filesystem::path persist_dir = "sessions";
    EmgConfig emg;
    std::optional<std::int64_t> started_at;  // unix seconds, defaults to now
    std::string workout_id;                  // generated when empty
    bool upload_requested = false;           // the user's explicit consent in manual mode
};

/// Reads a gateway config file. Keys: user_id, persist_dir, upload_mode
/// (manual|periodic), upload_period_s, endpoint, auth_token, started_at,
/// workout_id, emg.adc_span_mv, emg.threshold_mv, and per source N (0-based)
/// source.N.kind, source.N.address, source.N.protocol,
/// source.N.reconnect_max_attempts, source.N.reconnect_backoff_ms.
GatewayConfig load_gateway_config(const KeyValues& kv);

struct UploadReceipt {
    int status = 0;
    std::string workout_id;
    bool created = false;
    bool summary_mismatch = false;
};

struct SessionResult {
    std::string workout_id;
    std::filesystem::path session_dir;
    SessionSummary summary;
    std::optional<UploadReceipt> receipt;
    std::optional<std::string> upload_error;
};

/// Runs one session: a reader thread per source feeds an aggregator on the
/// calling thread. Raw bytes, the summary and the upload body are persisted
/// under persist_dir/<workout_id>/ before any upload is attempted. Upload
/// failures are reported in the result; unreachable sources throw
/// GatewayError(source_unreachable) after the session data is saved.
SessionResult run_session(const GatewayConfig& config, Transport& transport);

/// Rebuilds a persisted session's summary from its raw streams alone.
SessionSummary replay_session(const std::filesystem::path& session_dir);

/// Uploads a persisted session and records the receipt next to it. Throws
/// GatewayError(upload_failed) for transport failures and server errors,
/// GatewayError(rejected) when the server refuses the body.
UploadReceipt upload_session(const std::filesystem::path& session_dir, const UploadPolicy& policy,
                             Transport& transport);

/// Uploads every session under `root` that has no receipt yet. Returns the
/// number uploaded; sessions that fail stay pending.
std::size_t upload_pending(const std::filesystem::path& root, const UploadPolicy& policy,
                           Transport& transport);

}  // namespace bsn
