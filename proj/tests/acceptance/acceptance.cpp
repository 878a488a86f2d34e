// Acceptance run: one line per criterion, nonzero exit if any fails.
//
// Every check computes its expectation independently of the code under test
// (closed forms, hand-rolled aggregation, direct scans of the simulator's
// beat schedule) and applies the stated tolerance unchanged.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bsn/crc.hpp"
#include "bsn/datastore.hpp"
#include "bsn/emg.hpp"
#include "bsn/gateway.hpp"
#include "bsn/hxm.hpp"
#include "bsn/service.hpp"
#include "bsn/session.hpp"
#include "bsn/shimmer.hpp"
#include "bsn/sim.hpp"
#include "bsn/transport.hpp"
#include "bsn/wire.hpp"
#include "test_support.hpp"

namespace {

using namespace bsn;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- 1 ---------------------------------------------------------------------

Outcome codec_round_trip() {
    std::mt19937_64 rng(101);
    const auto t0 = Clock::now();
    std::size_t hxm_bad = 0, shimmer_bad = 0;
    for (int i = 0; i < 10000; ++i) {
        const HxmMessage m = testing::random_hxm(rng);
        if (decode_hxm(encode_hxm(m)) != m) ++hxm_bad;
    }
    for (int i = 0; i < 10000; ++i) {
        const ShimmerPacket p = testing::random_shimmer(rng);
        if (decode_shimmer(encode_shimmer(p)) != p) ++shimmer_bad;
    }
    const double secs = seconds_since(t0);
    return {hxm_bad == 0 && shimmer_bad == 0 && secs < 5.0,
            fmt("10000+10000 messages, %zu+%zu mismatches, %.3f s (limit 5 s)", hxm_bad, shimmer_bad, secs)};
}

// ---- 2 ---------------------------------------------------------------------

Outcome bit_flip_sweep() {
    HxmMessage m;
    m.firmware_id = 0x1A2B;
    m.firmware_version = 0x0201;
    m.hardware_id = 0x3C4D;
    m.hardware_version = 0x0001;
    m.battery_charge = 87;
    m.heart_rate = 72;
    m.heart_beat_number = 200;
    for (std::size_t i = 0; i < m.beat_timestamps.size(); ++i) {
        m.beat_timestamps[i] = static_cast<std::uint16_t>(60000 - 833 * i);
    }
    m.distance_raw = 1234;
    m.speed_raw = 896;
    m.strides = 77;
    const ShimmerPacket p{3, shimmer::kTypeEmg, 42, 51234, 1, 2222, 0};

    std::size_t hxm_missed = 0, shimmer_missed = 0;
    const Bytes hf = encode_hxm(m);
    for (std::size_t bit = 0; bit < hf.size() * 8; ++bit) {
        Bytes f = hf;
        f[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        HxmMessage out;
        if (try_decode_hxm(f, out) == DecodeStatus::ok) ++hxm_missed;
    }
    const Bytes sf = encode_shimmer(p);
    for (std::size_t bit = 0; bit < sf.size() * 8; ++bit) {
        Bytes f = sf;
        f[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        ShimmerPacket out;
        if (try_decode_shimmer(f, out) == DecodeStatus::ok) ++shimmer_missed;
    }
    return {hxm_missed == 0 && shimmer_missed == 0 && hf.size() == 57 && sf.size() == 14,
            fmt("HxM %zu flips, %zu accepted; Shimmer %zu flips, %zu accepted", hf.size() * 8, hxm_missed,
                sf.size() * 8, shimmer_missed)};
}

// ---- 3 ---------------------------------------------------------------------

Outcome unit_scalings() {
    const double speed = speed_mps(4095);
    const double dist = distance_m(16);
    HxmMessage m;
    m.heart_rate = 60;
    const Bytes base = encode_hxm(m);
    constexpr std::size_t kHrByte = 3 + 9;  // after STX, MsgID, DLC
    constexpr std::size_t kCrcByte = 55;
    auto status_for = [&](int hr) {
        Bytes f = base;
        f[kHrByte] = static_cast<std::uint8_t>(hr);
        f[kCrcByte] = crc8(ByteView(f.data() + 3, 52));
        HxmMessage out;
        return try_decode_hxm(f, out);
    };
    int low_rejected = 0, high_rejected = 0, valid_ok = 0;
    for (int hr = 1; hr <= 29; ++hr) low_rejected += status_for(hr) == DecodeStatus::bad_field;
    for (int hr = 241; hr <= 255; ++hr) high_rejected += status_for(hr) == DecodeStatus::bad_field;
    for (int hr : {0, 30, 120, 240}) valid_ok += status_for(hr) == DecodeStatus::ok;
    const bool pass = std::abs(speed - 15.996) < 0.0005 && dist == 1.0 && low_rejected == 29 &&
                      high_rejected == 15 && valid_ok == 4;
    return {pass, fmt("speed(4095)=%.5f m/s, distance(16)=%.4f m, HR 1-29 bad_field %d/29, 241-255 %d/15, "
                      "0/30/120/240 accepted %d/4",
                      speed, dist, low_rejected, high_rejected, valid_ok)};
}

// ---- 4 ---------------------------------------------------------------------

Outcome dsp_identities() {
    double worst_rms_rel = 0.0, min_ratio = 1.0, max_ratio = 0.0;
    for (double freq : {5.0, 7.0, 13.0, 31.0, 47.0}) {
        for (double amp : {1.0, 250.0, 1500.0}) {
            SampleSeries s{{}, 500.0};
            for (int i = 0; i < 5000; ++i) {
                s.samples.push_back(amp * std::sin(2.0 * std::numbers::pi * freq * i / 500.0 + 0.3));
            }
            worst_rms_rel = std::max(worst_rms_rel, std::abs(rms(s) / (amp / std::sqrt(2.0)) - 1.0));
            const double ratio = integral_average(s) / amp;
            min_ratio = std::min(min_ratio, ratio);
            max_ratio = std::max(max_ratio, ratio);
        }
    }
    std::mt19937_64 rng(404);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
        SampleSeries s{{}, 500.0};
        const std::size_t n = 1 + rng() % 2000;
        std::normal_distribution<double> g(std::uniform_real_distribution<double>(-50, 50)(rng),
                                           std::uniform_real_distribution<double>(0.01, 500)(rng));
        for (std::size_t k = 0; k < n; ++k) s.samples.push_back(g(rng));
        if (rms(s) < integral_average(s)) ++violations;
    }
    const bool pass = worst_rms_rel <= 0.001 && min_ratio >= 0.634 && max_ratio <= 0.640 && violations == 0;
    return {pass, fmt("sine rms worst rel err %.2e (limit 1e-3), IA/A in [%.5f, %.5f], rms<IA on %d/1000 vectors",
                      worst_rms_rel, min_ratio, max_ratio, violations)};
}

// ---- 5 ---------------------------------------------------------------------

SampleSeries decode_emg_mv(const Bytes& stream, double span) {
    FramerState f;
    SampleSeries s{{}, shimmer::kSampleRateHz};
    for (const auto& p : scan_shimmer(f, stream)) {
        if (p.data_type == shimmer::kTypeEmg && p.emg_len > 0) s.samples.push_back(emg_millivolts(p.emg_raw, span));
    }
    return s;
}

Outcome activation_and_fatigue() {
    std::mt19937_64 rng(505);
    auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    const double tol = 2.0 / shimmer::kSampleRateHz + 1e-9;
    int scenarios_ok = 0, bursts_total = 0;
    double worst_err = 0.0;
    constexpr int kScenarios = 25;
    for (int sc = 0; sc < kScenarios; ++sc) {
        sim::EmgProfile p;
        p.seed = rng();
        p.noise_rms_mv = uni(1.0, 20.0);
        double t = uni(0.5, 1.5);
        const int n = 1 + static_cast<int>(rng() % 5);
        for (int k = 0; k < n; ++k) {
            // Onsets and durations on the sample grid.
            const double onset = std::round(t * 500.0) / 500.0;
            const double dur = std::round(uni(0.2, 1.0) * 500.0) / 500.0;
            p.burst_schedule.push_back({onset, dur, uni(300.0, 550.0)});
            t = onset + dur + uni(0.3, 1.0);
        }
        const auto out = sim::gen_shimmer(p, t + 0.5);
        const SampleSeries env = smooth(rectify(decode_emg_mv(out.stream, p.adc_span_mv)), 0.01);
        const auto acts = activation_timing(env, 150.0, 0.1);
        bool ok = acts.size() == p.burst_schedule.size();
        for (std::size_t k = 0; ok && k < acts.size(); ++k) {
            const auto& b = p.burst_schedule[k];
            const double e = std::max(std::abs(acts[k].onset_s - b.onset_s),
                                      std::abs(acts[k].offset_s - (b.onset_s + b.duration_s)));
            worst_err = std::max(worst_err, e);
            ok = e <= tol;
        }
        bursts_total += n;
        scenarios_ok += ok;
    }

    double worst_slope_rel = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double secs = uni(5.0, 20.0);
        const double a = uni(50.0, 500.0);
        const double b = uni(0.5, a / (2.0 * secs));
        SampleSeries env{{}, 500.0};
        for (int k = 0; k < static_cast<int>(secs) * 500; ++k) env.samples.push_back(a - b * k / 500.0);
        worst_slope_rel = std::max(worst_slope_rel, std::abs(fatigue_slope(env) + b) / b);
    }
    const bool pass = scenarios_ok == kScenarios && worst_slope_rel <= 0.02;
    return {pass, fmt("%d/%d scenarios (%d bursts) within 2 samples, worst edge error %.1f samples; "
                      "fatigue slope worst rel err %.2e (limit 0.02)",
                      scenarios_ok, kScenarios, bursts_total, worst_err * 500.0, worst_slope_rel)};
}

// ---- 6 ---------------------------------------------------------------------

HxmSessionAccumulator accumulate(const Bytes& stream) {
    FramerState f;
    HxmSessionAccumulator acc;
    for (const auto& m : scan(f, stream)) acc.add(m);
    return acc;
}

sim::HrProfile steady(double bpm, double secs) {
    sim::HrProfile p;
    p.segments = {{secs, bpm}};
    return p;
}

Outcome rollover_walk() {
    std::mt19937_64 rng(606);
    double worst = 0.0;
    std::set<double> totals;
    std::set<std::uint64_t> wraps;
    constexpr int kTrials = 50;
    for (int i = 0; i < kTrials; ++i) {
        auto p = steady(100.0, 251.0);
        p.speed_mps = 4.0;
        p.distance_start_raw = static_cast<std::uint16_t>(i == 0 ? 0 : rng() % hxm::kDistanceModulus);
        const auto out = sim::gen_hxm(p, 251.0);  // frames at 1..251 s: 250 s of walking
        const auto acc = accumulate(out.stream);
        const double metres = static_cast<double>(acc.distance().total) / 16.0;
        worst = std::max(worst, std::abs(metres - 1000.0));
        totals.insert(metres);
        // Wraps seen between the first and last raw reading.
        wraps.insert((p.distance_start_raw + 64 + acc.distance().total) / hxm::kDistanceModulus);
    }
    const bool pass = worst <= 1.0 / 16.0 && totals.size() == 1;
    return {pass, fmt("%d start offsets, |total-1000 m| worst %.4f m (limit 0.0625), %zu distinct totals, "
                      "%zu-%zu wraps per walk",
                      kTrials, worst, totals.size(), *wraps.begin(), *wraps.rbegin())};
}

// ---- 7 ---------------------------------------------------------------------

// Beats the receiver cannot place: for each gap between transmitted frames,
// every new beat beyond the 15 the timestamp window holds.
struct LossOracle {
    std::uint64_t unrecovered = 0;
    std::uint64_t max_gap_beats = 0;
};

LossOracle loss_oracle(const sim::GroundTruth& t) {
    LossOracle o;
    std::optional<std::int64_t> prev_ms;
    for (std::size_t k = 0; k < t.frame_times_s.size(); ++k) {
        if (std::find(t.dropped_messages.begin(), t.dropped_messages.end(), k) != t.dropped_messages.end()) continue;
        const auto now_ms = static_cast<std::int64_t>(std::llround(t.frame_times_s[k] * 1000.0));
        if (prev_ms) {
            std::uint64_t n = 0;
            for (std::size_t b = sim::kPreHistoryBeats; b < t.beat_times_ms.size(); ++b) {
                n += t.beat_times_ms[b] > *prev_ms && t.beat_times_ms[b] <= now_ms;
            }
            o.max_gap_beats = std::max(o.max_gap_beats, n);
            if (n > 15) o.unrecovered += n - 15;
        }
        prev_ms = now_ms;
    }
    return o;
}

Outcome packet_loss() {
    std::mt19937_64 rng(707);
    constexpr int kSchedules = 60;
    int exact = 0, short_gap_schedules = 0, short_gap_zero = 0;
    std::uint64_t total_unrecovered = 0;
    for (int i = 0; i < kSchedules; ++i) {
        auto p = steady(40.0 + static_cast<double>(rng() % 180), 150.0);
        p.seed = rng();
        p.ibi_jitter_ms = (i % 3 == 0) ? 20.0 : 0.0;
        p.beat_counter_start = static_cast<std::uint8_t>(rng());
        p.clock_start_ms = static_cast<std::uint16_t>(rng());
        // Even schedules: scattered single drops. Odd: a few outages of up to 20 s.
        for (std::size_t k = 1; k < 149;) {
            if (i % 2 == 0) {
                if (rng() % 5 == 0) p.dropped_frames.push_back(k);
                ++k;
            } else if (rng() % 25 == 0) {
                const std::size_t len = 1 + rng() % 20;
                for (std::size_t j = k; j < std::min<std::size_t>(k + len, 149); ++j) p.dropped_frames.push_back(j);
                k += len + 1;
            } else {
                ++k;
            }
        }
        const auto out = sim::gen_hxm(p, 150.0);
        const auto oracle = loss_oracle(out.truth);
        const auto acc = accumulate(out.stream);
        exact += acc.hr().beats_unrecovered == oracle.unrecovered;
        total_unrecovered += oracle.unrecovered;
        if (oracle.max_gap_beats <= 15) {
            ++short_gap_schedules;
            short_gap_zero += acc.hr().beats_unrecovered == 0;
        }
    }
    const bool pass = exact == kSchedules && short_gap_zero == short_gap_schedules;
    return {pass, fmt("%d/%d schedules exact (%llu unrecovered beats in total); %d/%d schedules with all gaps "
                      "<= 15 beats report 0",
                      exact, kSchedules, static_cast<unsigned long long>(total_unrecovered), short_gap_zero,
                      short_gap_schedules)};
}

// ---- 8 ---------------------------------------------------------------------

void write_bytes(const std::filesystem::path& path, const Bytes& b) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

struct Recorded {
    std::string workout_id;
    std::string user_id;
    std::int64_t started_at = 0;
};

Outcome end_to_end() {
    testing::TempDir dir("accept");
    Datastore store;
    HttpTransport http(5000);
    TokenTable tokens{{"admin", "*"}};
    const std::vector<std::string> users{"u1", "u2", "u3", "u4", "u5"};
    for (const auto& u : users) tokens["tok-" + u] = u;
    IngestService service(store, tokens, http);
    HttpServer server(service);
    const std::string endpoint = "http://127.0.0.1:" + std::to_string(server.start("127.0.0.1", 0));

    auto api = [&](const std::string& method, const std::string& path, const std::string& token,
                   const wire::Json& body = nullptr) {
        HttpRequest r{method, endpoint + path, {{"Authorization", "Bearer " + token}}, ""};
        if (!body.is_null()) {
            r.body = body.dump();
            r.headers["Content-Type"] = "application/json";
        }
        return http.send(r);
    };

    // Two users share a display name so the tie-break is exercised.
    const std::vector<std::string> names{"Kim", "Ola", "Kim", "Ray", "Ada"};
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (api("POST", "/v1/users", "admin", {{"user_id", users[i]}, {"display_name", names[i]}}).status != 201)
            return {false, "user registration failed"};
    }
    const auto team_resp = api("POST", "/v1/teams", "admin", {{"name", "club"}});
    const std::string team = wire::parse(team_resp.body).at("team_id");
    for (const auto& u : users) api("POST", "/v1/teams/" + team + "/members", "tok-" + u, {{"user_id", u}});

    std::mt19937_64 rng(808);
    std::vector<Recorded> recorded;
    std::vector<std::filesystem::path> session_dirs;
    int uploads_created = 0, mismatches = 0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        for (int j = 0; j < 3; ++j) {
            const std::size_t n = i * 3 + static_cast<std::size_t>(j);
            sim::HrProfile hp;
            const double secs = 60.0 + static_cast<double>(rng() % 240);
            hp.segments = {{secs / 2, 60.0 + static_cast<double>(rng() % 100)},
                           {secs / 2, 60.0 + static_cast<double>(rng() % 100)}};
            hp.speed_mps = 1.0 + static_cast<double>(rng() % 40) / 10.0;
            hp.stride_rate_hz = 1.4;
            hp.seed = rng();
            hp.ibi_jitter_ms = 10.0;
            hp.distance_start_raw = static_cast<std::uint16_t>(rng() % 4096);
            for (std::size_t k = 2; k + 1 < static_cast<std::size_t>(secs); k += 3 + rng() % 30) {
                hp.dropped_frames.push_back(k);
            }
            const auto hxm_file = dir.path() / ("hxm-" + std::to_string(n) + ".bin");
            write_bytes(hxm_file, sim::gen_hxm(hp, secs).stream);

            GatewayConfig cfg;
            cfg.user_id = users[i];
            cfg.persist_dir = dir.path() / "sessions";
            // u2 and u4 record on the same seconds as u1 and u3 to make equal start times.
            cfg.started_at = 1'700'000'000 + static_cast<std::int64_t>((n / 6) * 1000 + j * 100);
            cfg.sources = {{SourceKind::file, hxm_file.string(), Protocol::hxm, 1, 10}};
            if (j == 2) {
                sim::EmgProfile ep;
                ep.seed = rng();
                ep.burst_schedule = {{2.0, 1.0, 400.0}, {5.0, 1.0, 350.0}};
                const auto emg_file = dir.path() / ("emg-" + std::to_string(n) + ".bin");
                write_bytes(emg_file, sim::gen_shimmer(ep, 8.0).stream);
                cfg.sources.push_back({SourceKind::file, emg_file.string(), Protocol::shimmer, 1, 10});
            }
            cfg.policy.endpoint = endpoint;
            cfg.policy.auth_token = "tok-" + users[i];
            if (n % 2 == 0) {
                cfg.policy.mode = UploadMode::periodic;
            } else {
                cfg.upload_requested = true;
            }
            const SessionResult r = run_session(cfg, http);
            if (!r.receipt) return {false, "upload failed: " + r.upload_error.value_or("?")};
            uploads_created += r.receipt->created;
            mismatches += r.receipt->summary_mismatch;
            recorded.push_back({r.workout_id, users[i], *cfg.started_at});
            session_dirs.push_back(r.session_dir);
        }
    }

    // Oracle inputs: each workout's stored record, fetched one by one.
    struct Row {
        std::int64_t started_at;
        std::string workout_id;
        double duration_s;
        double distance_m;
        std::optional<double> avg_hr;
    };
    std::map<std::string, std::vector<Row>> by_user;
    for (const auto& rec : recorded) {
        const auto w = wire::parse(api("GET", "/v1/workouts/" + rec.workout_id, "admin").body);
        const auto& s = w.at("summary");
        by_user[rec.user_id].push_back({rec.started_at, rec.workout_id, w.at("duration_s").get<double>(),
                                        s.at("distance_m").get<double>(),
                                        s.at("avg_hr_bpm").is_null()
                                            ? std::nullopt
                                            : std::optional<double>(s.at("avg_hr_bpm").get<double>())});
    }

    struct Range {
        std::optional<std::int64_t> from, to;
    };
    const std::vector<Range> ranges{{}, {1'700'000'000, 1'700'000'100}, {1'700'001'050, std::nullopt}};
    int boards = 0, boards_equal = 0;
    for (const char* metric : {"total_duration_s", "workout_count", "total_distance_m", "avg_hr_bpm"}) {
        for (const auto& range : ranges) {
            std::vector<std::tuple<double, std::string, std::string>> expected;  // value, name, user
            for (std::size_t i = 0; i < users.size(); ++i) {
                auto rows = by_user[users[i]];
                std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
                    return std::tie(a.started_at, a.workout_id) < std::tie(b.started_at, b.workout_id);
                });
                double sum = 0.0;
                int n = 0;
                for (const auto& r : rows) {
                    if ((range.from && r.started_at < *range.from) || (range.to && r.started_at > *range.to)) {
                        continue;
                    }
                    const std::string m = metric;
                    if (m == "total_duration_s") sum += r.duration_s;
                    if (m == "workout_count") sum += 1.0;
                    if (m == "total_distance_m") sum += r.distance_m;
                    if (m == "avg_hr_bpm" && r.avg_hr) {
                        sum += *r.avg_hr;
                        ++n;
                    }
                }
                if (std::string(metric) == "avg_hr_bpm") sum = n == 0 ? 0.0 : sum / n;
                expected.emplace_back(sum, names[i], users[i]);
            }
            std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
                if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
                return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
            });

            std::string q = "/v1/teams/" + team + "/leaderboard?metric=" + metric;
            if (range.from) q += "&from=" + std::to_string(*range.from);
            if (range.to) q += "&to=" + std::to_string(*range.to);
            const auto got = wire::parse(api("GET", q, "tok-u1").body).at("rows");
            bool equal = got.size() == expected.size();
            for (std::size_t k = 0; equal && k < got.size(); ++k) {
                equal = got[k].at("user_id") == std::get<2>(expected[k]) &&
                        got[k].at("value").get<double>() == std::get<0>(expected[k]);
            }
            ++boards;
            boards_equal += equal;
        }
    }

    // Duplicate uploads: every session again, plus the pending sweep.
    const std::string digest_before = store.digest();
    const auto counts_before = store.counts();
    int replays_ok = 0, raw_repeats_ok = 0;
    for (std::size_t k = 0; k < session_dirs.size(); ++k) {
        UploadPolicy policy;
        policy.endpoint = endpoint;
        policy.auth_token = "tok-" + recorded[k].user_id;
        // The gateway keys uploads by workout id, so a resend gets the first
        // response replayed rather than a fresh one.
        const auto receipt = upload_session(session_dirs[k], policy, http);
        replays_ok += receipt.status / 100 == 2 && receipt.workout_id == recorded[k].workout_id;
        // Same body without the header reaches the store's own duplicate check.
        std::ifstream in(session_dirs[k] / "upload.json");
        const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        HttpRequest raw{"POST", endpoint + "/v1/workouts", {{"Authorization", "Bearer " + policy.auth_token}}, body};
        raw_repeats_ok += http.send(raw).status == 200;
    }
    UploadPolicy admin_policy{UploadMode::periodic, 0, endpoint, "admin"};
    const std::size_t pending = upload_pending(dir.path() / "sessions", admin_policy, http);
    const bool digest_same = store.digest() == digest_before && store.counts() == counts_before;
    server.stop();

    const bool pass = uploads_created == 15 && mismatches == 0 && boards_equal == boards && replays_ok == 15 &&
                      raw_repeats_ok == 15 && pending == 0 && digest_same;
    return {pass, fmt("15/15 workouts expected, %d created, %d summary mismatches; %d/%d leaderboards "
                      "equal to oracle; %d/15 gateway resends acknowledged, %d/15 bare resends 200; digest %s",
                      uploads_created, mismatches, boards_equal, boards, replays_ok, raw_repeats_ok,
                      digest_same ? "unchanged" : "CHANGED")};
}

// ---- 9 ---------------------------------------------------------------------

Outcome consent() {
    testing::TempDir dir("consent");
    sim::HrProfile p = steady(75.0, 60.0);
    p.speed_mps = 2.0;
    write_bytes(dir.path() / "hxm.bin", sim::gen_hxm(p, 60.0).stream);
    sim::EmgProfile e;
    e.burst_schedule = {{1.0, 1.0, 300.0}};
    write_bytes(dir.path() / "emg.bin", sim::gen_shimmer(e, 4.0).stream);

    CountingTransport fake([](const HttpRequest&) { return HttpResponse{201, "{}", ""}; });
    int sessions = 0;
    for (int i = 0; i < 5; ++i) {
        GatewayConfig cfg;
        cfg.user_id = "ann";
        cfg.persist_dir = dir.path() / "sessions";
        cfg.sources = {{SourceKind::file, (dir.path() / "hxm.bin").string(), Protocol::hxm, 1, 10},
                       {SourceKind::file, (dir.path() / "emg.bin").string(), Protocol::shimmer, 1, 10}};
        cfg.policy.mode = UploadMode::manual;
        cfg.policy.endpoint = "http://127.0.0.1:9";
        cfg.policy.auth_token = "t";
        const auto r = run_session(cfg, fake);
        sessions += !r.receipt && !r.upload_error && std::filesystem::exists(r.session_dir / "upload.json");
    }
    const bool pass = fake.count() == 0 && sessions == 5;
    return {pass, fmt("5 manual sessions without an upload command, %d persisted, %zu outbound requests", sessions,
                      fake.count())};
}

// ---- 10 --------------------------------------------------------------------

Outcome throughput() {
    std::mt19937_64 rng(1010);
    constexpr std::size_t kHxm = 200'000, kShimmer = 1'000'000;
    Bytes hxm_stream, shimmer_stream;
    hxm_stream.reserve(kHxm * hxm::kFrameSize);
    shimmer_stream.reserve(kShimmer * shimmer::kFrameSize);
    for (std::size_t i = 0; i < kHxm; ++i) {
        const Bytes f = encode_hxm(testing::random_hxm(rng));
        hxm_stream.insert(hxm_stream.end(), f.begin(), f.end());
    }
    for (std::size_t i = 0; i < kShimmer; ++i) {
        const Bytes f = encode_shimmer(testing::random_shimmer(rng));
        shimmer_stream.insert(shimmer_stream.end(), f.begin(), f.end());
    }
    // Fed in 4 KiB chunks the way a socket delivers them.
    auto time_decode = [](const Bytes& stream, auto&& scanner) {
        FramerState f;
        std::size_t frames = 0;
        const auto t0 = Clock::now();
        for (std::size_t off = 0; off < stream.size(); off += 4096) {
            const std::size_t n = std::min<std::size_t>(4096, stream.size() - off);
            frames += scanner(f, ByteView(stream.data() + off, n)).size();
        }
        return std::pair{frames, seconds_since(t0)};
    };
    const auto [hf, hs] = time_decode(hxm_stream, [](FramerState& f, ByteView c) { return scan(f, c); });
    const auto [sf, ss] = time_decode(shimmer_stream, [](FramerState& f, ByteView c) { return scan_shimmer(f, c); });
    const double hxm_rate = static_cast<double>(hf) / hs;
    const double shimmer_rate = static_cast<double>(sf) / ss;
    const bool pass = hf == kHxm && sf == kShimmer && hxm_rate >= 50'000 && shimmer_rate >= 200'000;
    return {pass, fmt("HxM %.0f frames/s (floor 50000), Shimmer %.0f packets/s (floor 200000)", hxm_rate,
                      shimmer_rate)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"codec round trip", codec_round_trip},
        {"single-bit corruption detection", bit_flip_sweep},
        {"unit scalings and heart-rate window", unit_scalings},
        {"DSP identities", dsp_identities},
        {"activation and fatigue recovery", activation_and_fatigue},
        {"distance rollover", rollover_walk},
        {"packet-loss accounting", packet_loss},
        {"end-to-end pipeline", end_to_end},
        {"manual-mode consent", consent},
        {"decode throughput", throughput},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
