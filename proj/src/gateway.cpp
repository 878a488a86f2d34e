#include "bsn/gateway.hpp"

#include <array>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "bsn/hxm.hpp"
#include "bsn/shimmer.hpp"
#include "bsn/uuid.hpp"
#include "bsn/wire.hpp"

namespace bsn {
namespace fs = std::filesystem;

namespace {

constexpr const char* kSessionFile = "session.txt";
constexpr const char* kSummaryFile = "summary.json";
constexpr const char* kUploadFile = "upload.json";
constexpr const char* kReceiptFile = "receipt.json";

std::string raw_file(std::size_t i, Protocol p) {
    return "source-" + std::to_string(i) + "." + to_string(p) + ".bin";
}

std::string resets_file(std::size_t i) { return "source-" + std::to_string(i) + ".resets"; }

void write_file(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out.flush()) {
            throw GatewayError(GatewayError::Kind::io, "cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw GatewayError(GatewayError::Kind::io, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Reader thread to aggregator messages.
struct Event {
    enum class Kind { data, reset, end, failed };
    Kind kind = Kind::data;
    std::size_t source = 0;
    Bytes bytes;
    std::string error;
};

class EventQueue {
public:
    void push(Event e) {
        {
            std::lock_guard<std::mutex> lock(mu_);
            q_.push_back(std::move(e));
        }
        cv_.notify_one();
    }
    Event pop() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return !q_.empty(); });
        Event e = std::move(q_.front());
        q_.pop_front();
        return e;
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Event> q_;
};

// Opens the source, retrying with backoff. Returns false once attempts run out.
bool connect_with_retry(ByteSource& src, const SourceConfig& cfg, std::string& error) {
    for (std::uint32_t attempt = 0;; ++attempt) {
        if (attempt > 0) {
            const auto delay = reconnect_delay_ms(cfg, attempt);
            if (!delay) {
                return false;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(*delay));
        }
        try {
            src.open();
            return true;
        } catch (const SourceError& e) {
            error = e.what();
        }
    }
}

void reader(std::size_t index, const SourceConfig& cfg, EventQueue& q) {
    std::unique_ptr<ByteSource> src;
    std::string error;
    try {
        src = make_source(cfg);
    } catch (const SourceError& e) {
        q.push({Event::Kind::failed, index, {}, e.what()});
        return;
    }
    if (!connect_with_retry(*src, cfg, error)) {
        q.push({Event::Kind::failed, index, {}, error});
        return;
    }
    std::array<std::uint8_t, 4096> buf{};
    for (;;) {
        try {
            const std::size_t n = src->read(buf);
            if (n == 0) {
                src->close();
                q.push({Event::Kind::end, index, {}, {}});
                return;
            }
            q.push({Event::Kind::data, index, Bytes(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n)), {}});
        } catch (const SourceError& e) {
            src->close();
            if (!connect_with_retry(*src, cfg, error)) {
                q.push({Event::Kind::failed, index, {}, std::string(e.what()) + "; " + error});
                return;
            }
            q.push({Event::Kind::reset, index, {}, {}});
        }
    }
}

std::vector<Protocol> protocols_of(const std::vector<SourceConfig>& sources) {
    std::vector<Protocol> out;
    for (const auto& s : sources) {
        out.push_back(s.protocol);
    }
    return out;
}

KeyValues session_record(const GatewayConfig& cfg, const std::string& workout_id, std::int64_t started_at) {
    KeyValues kv;
    kv.set("workout_id", workout_id);
    kv.set("user_id", cfg.user_id);
    kv.set("started_at", std::to_string(started_at));
    kv.set("sources", std::to_string(cfg.sources.size()));
    for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
        const std::string p = "source." + std::to_string(i) + ".";
        kv.set(p + "kind", to_string(cfg.sources[i].kind));
        kv.set(p + "address", cfg.sources[i].address);
        kv.set(p + "protocol", to_string(cfg.sources[i].protocol));
    }
    std::ostringstream span;
    span.precision(17);
    span << cfg.emg.adc_span_mv;
    kv.set("emg.adc_span_mv", span.str());
    if (cfg.emg.activation_threshold) {
        std::ostringstream t;
        t.precision(17);
        t << *cfg.emg.activation_threshold;
        kv.set("emg.threshold_mv", t.str());
    }
    return kv;
}

std::string to_text(const KeyValues& kv) {
    std::ostringstream out;
    for (const auto& [k, v] : kv.entries()) {
        out << k << '=' << v << '\n';
    }
    return out.str();
}

EmgConfig emg_config_from(const KeyValues& kv) {
    EmgConfig c;
    c.adc_span_mv = kv.get_double("emg.adc_span_mv", c.adc_span_mv);
    if (kv.has("emg.threshold_mv")) {
        c.activation_threshold = kv.get_double("emg.threshold_mv");
    }
    return c;
}

}  // namespace

SessionBuilder::SessionBuilder(std::vector<Protocol> protocols, EmgConfig emg) : emg_config_(emg) {
    std::uint32_t channels = 0;
    bool have_hxm = false;
    for (Protocol p : protocols) {
        Stream s;
        s.protocol = p;
        if (p == Protocol::hxm) {
            if (have_hxm) {
                throw GatewayError(GatewayError::Kind::config, "at most one hxm source per session");
            }
            have_hxm = true;
        } else {
            s.channel = channels++;
        }
        streams_.push_back(s);
    }
    if (channels > 2) {
        throw GatewayError(GatewayError::Kind::config, "at most two shimmer sources per session");
    }
    emg_.assign(channels, SampleSeries{{}, shimmer::kSampleRateHz});
}

void SessionBuilder::feed(std::size_t source, ByteView chunk) {
    Stream& s = streams_.at(source);
    if (s.protocol == Protocol::hxm) {
        for (const auto& msg : scan(s.framer, chunk)) {
            hxm_.add(msg);
            ++s.packets;
        }
        return;
    }
    for (const auto& pkt : scan_shimmer(s.framer, chunk)) {
        ++s.packets;
        if (pkt.data_type != shimmer::kTypeEmg) {
            ++s.unknown_type;
            continue;
        }
        if (pkt.emg_len > 0) {
            emg_[s.channel].samples.push_back(emg_millivolts(pkt.emg_raw, emg_config_.adc_span_mv));
        }
    }
}

void SessionBuilder::link_reset(std::size_t source) { discard_pending(streams_.at(source).framer); }

double SessionBuilder::duration_s() const {
    double d = 0.0;
    for (const auto& s : streams_) {
        const double rate = s.protocol == Protocol::hxm ? 1.0 : shimmer::kSampleRateHz;
        d = std::max(d, static_cast<double>(s.packets) / rate);
    }
    return d;
}

SessionSummary SessionBuilder::summary() const {
    std::optional<EmgReport> emg;
    if (!emg_.empty() && !emg_[0].samples.empty()) {
        const SampleSeries* right = emg_.size() > 1 && !emg_[1].samples.empty() ? &emg_[1] : nullptr;
        try {
            emg = analyze_emg(emg_[0], emg_config_, right);
        } catch (const EmgError& e) {
            // A silent right channel leaves symmetry undefined; report the rest.
            if (e.kind() != EmgError::Kind::zero_denominator) {
                throw;
            }
            emg = analyze_emg(emg_[0], emg_config_, nullptr);
        }
    }
    SessionSummary s = summarize(hxm_.hr(), hxm_.distance(), hxm_.strides(), emg, 0.0, duration_s());
    for (const auto& st : streams_) {
        s.diagnostics.frames_ok += st.framer.frames_ok;
        s.diagnostics.frames_rejected += st.framer.frames_rejected;
        s.diagnostics.bytes_skipped += st.framer.bytes_skipped + st.framer.pending.size();
        s.diagnostics.unknown_type_packets += st.unknown_type;
    }
    return s;
}

std::vector<SampleRow> SessionBuilder::samples() const {
    std::vector<SampleRow> rows;
    const auto& hr = hxm_.hr();
    for (std::size_t i = 0; i < hr.ibi_ms.size(); ++i) {
        rows.push_back({SensorKind::hr, 0, hr.beat_offset_ms[i], 60000.0 / hr.ibi_ms[i]});
    }
    const auto& trace = hxm_.distance_trace();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        rows.push_back({SensorKind::distance, 0, static_cast<std::int64_t>(i) * 1000, trace[i]});
    }
    for (std::size_t ch = 0; ch < emg_.size(); ++ch) {
        const auto& series = emg_[ch].samples;
        for (std::size_t i = 0; i < series.size(); ++i) {
            rows.push_back({SensorKind::emg, static_cast<std::uint32_t>(ch), static_cast<std::int64_t>(i) * 2,
                            series[i]});
        }
    }
    return rows;
}

GatewayConfig load_gateway_config(const KeyValues& kv) {
    GatewayConfig c;
    c.user_id = kv.get("user_id", "");
    c.persist_dir = kv.get("persist_dir", "sessions");
    const std::string mode = kv.get("upload_mode", "manual");
    if (mode == "manual") {
        c.policy.mode = UploadMode::manual;
    } else if (mode == "periodic") {
        c.policy.mode = UploadMode::periodic;
    } else {
        throw ConfigError("upload_mode must be manual or periodic");
    }
    c.policy.period_s = static_cast<std::uint32_t>(kv.get_u64("upload_period_s", 0));
    if (c.policy.mode == UploadMode::periodic && c.policy.period_s == 0) {
        throw ConfigError("upload_period_s must be positive in periodic mode");
    }
    c.policy.endpoint = kv.get("endpoint", "");
    c.policy.auth_token = kv.get("auth_token", "");
    if (kv.has("started_at")) {
        c.started_at = static_cast<std::int64_t>(kv.get_u64("started_at"));
    }
    c.workout_id = kv.get("workout_id", "");
    c.emg = emg_config_from(kv);
    for (std::size_t i = 0;; ++i) {
        const std::string p = "source." + std::to_string(i) + ".";
        if (!kv.has(p + "address")) {
            break;
        }
        SourceConfig s;
        const auto kind = source_kind_from_string(kv.get(p + "kind", "file"));
        const auto proto = protocol_from_string(kv.get(p + "protocol"));
        if (!kind || !proto) {
            throw ConfigError(p + "kind/protocol not recognized");
        }
        s.kind = *kind;
        s.protocol = *proto;
        s.address = kv.get(p + "address");
        s.reconnect_max_attempts = static_cast<std::uint32_t>(kv.get_u64(p + "reconnect_max_attempts", 3));
        s.reconnect_backoff_ms = static_cast<std::uint32_t>(kv.get_u64(p + "reconnect_backoff_ms", 500));
        if (s.reconnect_backoff_ms == 0) {
            throw ConfigError(p + "reconnect_backoff_ms must be positive");
        }
        c.sources.push_back(s);
    }
    return c;
}

SessionResult run_session(const GatewayConfig& config, Transport& transport) {
    if (config.sources.empty()) {
        throw GatewayError(GatewayError::Kind::config, "a session needs at least one source");
    }
    if (config.user_id.empty()) {
        throw GatewayError(GatewayError::Kind::config, "a session needs a user_id");
    }
    SessionBuilder builder(protocols_of(config.sources), config.emg);

    SessionResult result;
    result.workout_id = config.workout_id.empty() ? new_uuid() : config.workout_id;
    const std::int64_t started_at =
        config.started_at.value_or(std::chrono::duration_cast<std::chrono::seconds>(
                                       std::chrono::system_clock::now().time_since_epoch())
                                       .count());
    result.session_dir = config.persist_dir / result.workout_id;
    std::error_code ec;
    fs::create_directories(result.session_dir, ec);
    if (ec) {
        throw GatewayError(GatewayError::Kind::io, "cannot create " + result.session_dir.string());
    }
    write_file(result.session_dir / kSessionFile, to_text(session_record(config, result.workout_id, started_at)));

    if (config.policy.mode == UploadMode::periodic) {
        upload_pending(config.persist_dir, config.policy, transport);
    }

    std::vector<std::ofstream> raw;
    std::vector<std::ofstream> resets;
    std::vector<std::uint64_t> written(config.sources.size(), 0);
    for (std::size_t i = 0; i < config.sources.size(); ++i) {
        raw.emplace_back(result.session_dir / raw_file(i, config.sources[i].protocol), std::ios::binary);
        resets.emplace_back(result.session_dir / resets_file(i));
        if (!raw.back() || !resets.back()) {
            throw GatewayError(GatewayError::Kind::io, "cannot create raw stream files");
        }
    }

    EventQueue queue;
    std::vector<std::thread> readers;
    for (std::size_t i = 0; i < config.sources.size(); ++i) {
        readers.emplace_back(reader, i, std::cref(config.sources[i]), std::ref(queue));
    }
    std::vector<std::string> failures;
    for (std::size_t open = config.sources.size(); open > 0;) {
        Event e = queue.pop();
        switch (e.kind) {
            case Event::Kind::data:
                raw[e.source].write(reinterpret_cast<const char*>(e.bytes.data()),
                                    static_cast<std::streamsize>(e.bytes.size()));
                written[e.source] += e.bytes.size();
                builder.feed(e.source, e.bytes);
                break;
            case Event::Kind::reset:
                resets[e.source] << written[e.source] << '\n';
                builder.link_reset(e.source);
                break;
            case Event::Kind::failed:
                failures.push_back(config.sources[e.source].address + ": " + e.error);
                --open;
                break;
            case Event::Kind::end:
                --open;
                break;
        }
    }
    for (auto& t : readers) {
        t.join();
    }
    for (auto& f : raw) {
        f.flush();
    }
    for (auto& f : resets) {
        f.flush();
    }

    result.summary = builder.summary();
    wire::WorkoutUpload body;
    body.workout.workout_id = result.workout_id;
    body.workout.user_id = config.user_id;
    body.workout.started_at = started_at;
    body.workout.duration_s = result.summary.duration_s;
    body.workout.summary = result.summary;
    body.samples = builder.samples();
    write_file(result.session_dir / kSummaryFile, wire::to_json(result.summary).dump(2));
    write_file(result.session_dir / kUploadFile, wire::to_json(body).dump());

    if (!failures.empty()) {
        std::string msg = "source unreachable";
        for (const auto& f : failures) {
            msg += "; " + f;
        }
        throw GatewayError(GatewayError::Kind::source_unreachable, msg);
    }

    const bool consent = config.policy.mode == UploadMode::periodic || config.upload_requested;
    if (consent) {
        try {
            result.receipt = upload_session(result.session_dir, config.policy, transport);
        } catch (const GatewayError& e) {
            result.upload_error = e.what();
        }
    }
    return result;
}

SessionSummary replay_session(const fs::path& session_dir) {
    const KeyValues kv = KeyValues::load(session_dir / kSessionFile);
    const std::size_t n = kv.get_u64("sources");
    std::vector<Protocol> protocols;
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = protocol_from_string(kv.get("source." + std::to_string(i) + ".protocol"));
        if (!p) {
            throw GatewayError(GatewayError::Kind::io, "bad protocol in " + session_dir.string());
        }
        protocols.push_back(*p);
    }
    SessionBuilder builder(protocols, emg_config_from(kv));
    for (std::size_t i = 0; i < n; ++i) {
        const std::string bytes = read_file(session_dir / raw_file(i, protocols[i]));
        std::vector<std::uint64_t> cuts;
        std::ifstream rf(session_dir / resets_file(i));
        for (std::uint64_t c; rf >> c;) {
            cuts.push_back(c);
        }
        const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
        std::uint64_t pos = 0;
        for (std::uint64_t cut : cuts) {
            builder.feed(i, ByteView(data + pos, cut - pos));
            builder.link_reset(i);
            pos = cut;
        }
        builder.feed(i, ByteView(data + pos, bytes.size() - pos));
    }
    return builder.summary();
}

UploadReceipt upload_session(const fs::path& session_dir, const UploadPolicy& policy, Transport& transport) {
    if (policy.endpoint.empty()) {
        throw GatewayError(GatewayError::Kind::upload_failed, "no upload endpoint configured");
    }
    const std::string body = read_file(session_dir / kUploadFile);
    const KeyValues kv = KeyValues::load(session_dir / kSessionFile);
    HttpRequest req;
    req.method = "POST";
    req.url = policy.endpoint + "/v1/workouts";
    req.headers["Authorization"] = "Bearer " + policy.auth_token;
    req.headers["Idempotency-Key"] = kv.get("workout_id");
    req.body = body;
    const HttpResponse res = transport.send(req);
    if (!res.reached()) {
        throw GatewayError(GatewayError::Kind::upload_failed, "upload failed: " + res.error);
    }
    if (res.status >= 400 && res.status < 500) {
        throw GatewayError(GatewayError::Kind::rejected,
                           "upload rejected (" + std::to_string(res.status) + "): " + res.body);
    }
    if (res.status != 200 && res.status != 201) {
        throw GatewayError(GatewayError::Kind::upload_failed,
                           "upload failed (" + std::to_string(res.status) + "): " + res.body);
    }
    UploadReceipt receipt;
    receipt.status = res.status;
    try {
        const auto j = wire::parse(res.body);
        receipt.workout_id = j.at("workout_id").get<std::string>();
        receipt.created = j.value("created", false);
        receipt.summary_mismatch = j.value("summary_mismatch", false);
    } catch (const std::exception& e) {
        throw GatewayError(GatewayError::Kind::upload_failed, std::string("unreadable receipt: ") + e.what());
    }
    write_file(session_dir / kReceiptFile,
               wire::Json{{"status", receipt.status},
                          {"workout_id", receipt.workout_id},
                          {"created", receipt.created},
                          {"summary_mismatch", receipt.summary_mismatch}}
                   .dump());
    return receipt;
}

std::size_t upload_pending(const fs::path& root, const UploadPolicy& policy, Transport& transport) {
    std::size_t uploaded = 0;
    std::error_code ec;
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        if (entry.is_directory() && fs::exists(entry.path() / kUploadFile) &&
            !fs::exists(entry.path() / kReceiptFile)) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
        try {
            upload_session(dir, policy, transport);
            ++uploaded;
        } catch (const GatewayError&) {
        }
    }
    return uploaded;
}

}  // namespace bsn
