// bsn: command-line front end for the sensor pipeline.
//
// Exit codes: 0 success, 1 validation or decoding failure, 2 I/O, 3 network.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "bsn/datastore.hpp"
#include "bsn/emg.hpp"
#include "bsn/gateway.hpp"
#include "bsn/hxm.hpp"
#include "bsn/kv.hpp"
#include "bsn/service.hpp"
#include "bsn/shimmer.hpp"
#include "bsn/sim.hpp"
#include "bsn/status.hpp"
#include "bsn/transport.hpp"
#include "bsn/wire.hpp"

namespace {

using namespace bsn;

enum Exit { ok = 0, validation = 1, io = 2, network = 3 };

// Carries an exit code out of a subcommand.
struct Failure {
    int code;
    std::string message;
};

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Failure{io, "cannot read " + path};
    }
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw Failure{io, "cannot write " + path};
    }
}

KeyValues load_kv(const std::string& path) {
    try {
        return KeyValues::load(path);
    } catch (const ConfigError& e) {
        throw Failure{io, e.what()};
    }
}

Protocol parse_protocol(const std::string& name) {
    return name == "hxm" ? Protocol::hxm : Protocol::shimmer;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string protocol;
    std::string profile;
    double duration_s = 60.0;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string truth;
};

int run_simulate(const SimulateArgs& a) {
    const KeyValues kv = load_kv(a.profile);
    sim::SimOutput out;
    if (a.protocol == "hxm") {
        auto p = sim::parse_hr_profile(kv);
        if (a.seed) p.seed = *a.seed;
        out = sim::gen_hxm(p, a.duration_s);
    } else {
        auto p = sim::parse_emg_profile(kv);
        if (a.seed) p.seed = *a.seed;
        out = sim::gen_shimmer(p, a.duration_s);
    }
    write_file(a.out, std::string(out.stream.begin(), out.stream.end()));
    if (!a.truth.empty()) {
        std::ostringstream truth;
        sim::write_ground_truth(truth, out.truth);
        write_file(a.truth, truth.str());
    }
    std::cout << "bytes=" << out.stream.size() << '\n';
    return ok;
}

// ---- decode ----------------------------------------------------------------

struct DecodeArgs {
    std::string protocol;
    std::string in;
    std::string emit = "summary";
    double adc_span_mv = shimmer::kDefaultAdcSpanMv;
};

void print_fields(const HxmMessage& m) {
    std::cout << "hr=" << int(m.heart_rate) << " beat=" << int(m.heart_beat_number)
              << " ts0=" << m.beat_timestamps[0] << " distance_raw=" << m.distance_raw
              << " speed_mps=" << std::fixed << std::setprecision(3) << speed_mps(m.speed_raw)
              << std::defaultfloat << " strides=" << int(m.strides) << " battery=" << int(m.battery_charge)
              << '\n';
}

void print_fields(const ShimmerPacket& p, double span) {
    std::cout << "seq=" << int(p.sequence) << " ts=" << p.timestamp_ms << " sensor=" << int(p.sensor_id)
              << " type=0x" << std::hex << int(p.data_type) << std::dec << " emg_len=" << int(p.emg_len)
              << " emg_raw=" << p.emg_raw;
    if (p.emg_len > 0) {
        std::cout << " emg_mv=" << std::fixed << std::setprecision(3) << emg_millivolts(p.emg_raw, span)
                  << std::defaultfloat;
    }
    std::cout << " battery_mv=" << p.battery_mv << '\n';
}

int run_decode(const DecodeArgs& a) {
    const Bytes data = read_file(a.in);
    FramerState framer;
    if (a.emit == "summary") {
        EmgConfig emg;
        emg.adc_span_mv = a.adc_span_mv;
        SessionBuilder builder({parse_protocol(a.protocol)}, emg);
        builder.feed(0, data);
        const SessionSummary s = builder.summary();
        std::cout << wire::to_json(s).dump(2) << '\n';
        framer.frames_ok = s.diagnostics.frames_ok;
        framer.frames_rejected = s.diagnostics.frames_rejected;
        framer.bytes_skipped = s.diagnostics.bytes_skipped;
    } else if (a.protocol == "hxm") {
        for (const auto& m : scan(framer, data)) {
            print_fields(m);
        }
    } else {
        std::cout << std::setprecision(17);
        for (const auto& p : scan_shimmer(framer, data)) {
            if (a.emit == "series") {
                if (p.data_type == shimmer::kTypeEmg && p.emg_len > 0) {
                    std::cout << emg_millivolts(p.emg_raw, a.adc_span_mv) << '\n';
                }
            } else {
                print_fields(p, a.adc_span_mv);
            }
        }
    }
    const std::uint64_t skipped = framer.bytes_skipped + framer.pending.size();
    std::cerr << "frames_ok=" << framer.frames_ok << " frames_rejected=" << framer.frames_rejected
              << " bytes_skipped=" << skipped << '\n';
    return framer.frames_rejected == 0 && skipped == 0 ? ok : validation;
}

// ---- emg analyze -----------------------------------------------------------

struct EmgArgs {
    std::string in;
    std::string right;
    std::string report;
    double rate_hz = shimmer::kSampleRateHz;
    std::optional<double> threshold_mv;
};

// One millivolt value per line; '#' lines are comments.
SampleSeries read_series(const std::string& path, double rate_hz) {
    std::ifstream in(path);
    if (!in) {
        throw Failure{io, "cannot read " + path};
    }
    SampleSeries s;
    s.rate_hz = rate_hz;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        try {
            s.samples.push_back(parse_double(line));
        } catch (const ConfigError& e) {
            throw Failure{validation, path + ": " + e.what()};
        }
    }
    return s;
}

int run_emg(const EmgArgs& a) {
    const SampleSeries left = read_series(a.in, a.rate_hz);
    std::optional<SampleSeries> right;
    if (!a.right.empty()) right = read_series(a.right, a.rate_hz);
    EmgConfig cfg;
    cfg.activation_threshold = a.threshold_mv;
    const EmgReport r = analyze_emg(left, cfg, right ? &*right : nullptr);

    std::cout << std::setprecision(6);
    std::cout << "samples=" << r.sample_count << '\n'
              << "rate_hz=" << r.rate_hz << '\n'
              << "rms_mv=" << r.rms << '\n'
              << "integral_average_mv=" << r.integral_average << '\n'
              << "peak_to_peak_avg_mv=" << r.peak_to_peak_avg << '\n'
              << "threshold_mv=" << r.threshold_used << '\n'
              << "activations=" << r.activations.size() << '\n';
    for (const auto& act : r.activations) {
        std::cout << "activation=" << act.onset_s << ':' << act.offset_s << '\n';
    }
    if (r.symmetry_ratio) std::cout << "symmetry_ratio=" << *r.symmetry_ratio << '\n';
    if (r.fatigue_slope) std::cout << "fatigue_slope_mv_per_s=" << *r.fatigue_slope << '\n';
    if (!a.report.empty()) {
        write_file(a.report, wire::to_json(r).dump(2) + "\n");
    }
    return ok;
}

// ---- serve -----------------------------------------------------------------

int run_serve(const std::string& config_path) {
    const std::filesystem::path cfg_path(config_path);
    const ServiceConfig cfg = load_service_config(load_kv(config_path), cfg_path.parent_path());
    Datastore store(cfg.db_path);
    HttpTransport webhooks;
    IngestService service(store, cfg.tokens, webhooks);
    HttpServer server(service);

    // Block the stop signals before any server thread exists so only the
    // waiter below receives them.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    int port = 0;
    try {
        port = server.start(cfg.host, cfg.port);
    } catch (const std::exception& e) {
        throw Failure{network, e.what()};
    }
    std::cout << "listening on " << cfg.host << ':' << port << std::endl;
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        server.stop();
    });
    server.wait();
    // wait() only returns after stop(), which only the waiter calls.
    waiter.join();
    return ok;
}

// ---- session ---------------------------------------------------------------

int run_session_cmd(const std::string& config_path, bool post) {
    GatewayConfig cfg = load_gateway_config(load_kv(config_path));
    cfg.upload_requested = post;
    HttpTransport http;
    const SessionResult r = run_session(cfg, http);
    std::cout << "workout_id=" << r.workout_id << '\n'
              << "session_dir=" << r.session_dir.string() << '\n'
              << "status=" << format_status(r.summary) << '\n';
    if (r.receipt) {
        std::cout << "upload_status=" << r.receipt->status << '\n'
                  << "summary_mismatch=" << (r.receipt->summary_mismatch ? "true" : "false") << '\n';
    }
    if (r.upload_error) {
        std::cerr << "upload: " << *r.upload_error << '\n';
        return network;
    }
    return ok;
}

// ---- share -----------------------------------------------------------------

struct ShareArgs {
    std::string workout;
    std::string webhook;
    std::string config;
    std::string endpoint;
    std::string token;
    std::string user;
};

int run_share(ShareArgs a) {
    if (!a.config.empty()) {
        const KeyValues kv = load_kv(a.config);
        if (a.endpoint.empty()) a.endpoint = kv.get("endpoint", "");
        if (a.token.empty()) a.token = kv.get("auth_token", "");
        if (a.user.empty()) a.user = kv.get("user_id", "");
    }
    if (a.endpoint.empty() || a.user.empty()) {
        throw Failure{validation, "share needs an endpoint and a user (--config or --endpoint/--user)"};
    }
    HttpRequest req;
    req.method = "POST";
    req.url = a.endpoint + "/v1/share";
    req.headers["Authorization"] = "Bearer " + a.token;
    req.headers["Content-Type"] = "application/json";
    req.body = wire::Json{{"user_id", a.user}, {"workout_id", a.workout}, {"target", a.webhook}}.dump();
    HttpTransport http;
    const HttpResponse resp = http.send(req);
    if (resp.status == 0) {
        throw Failure{network, "service unreachable: " + resp.error};
    }
    std::cout << resp.body << '\n';
    if (resp.status >= 200 && resp.status < 300) return ok;
    return resp.status == 502 || resp.status >= 500 ? network : validation;
}

int exit_code_for(const GatewayError& e) {
    switch (e.kind()) {
        case GatewayError::Kind::config:
        case GatewayError::Kind::rejected:
            return validation;
        case GatewayError::Kind::io:
            return io;
        case GatewayError::Kind::source_unreachable:
        case GatewayError::Kind::upload_failed:
            return network;
    }
    return validation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Body sensor network pipeline"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic sensor stream");
    simulate->add_option("protocol", sim_args.protocol)->required()->check(CLI::IsMember({"hxm", "shimmer"}));
    simulate->add_option("--profile", sim_args.profile, "key=value scenario file")->required();
    simulate->add_option("--duration", sim_args.duration_s, "seconds");
    simulate->add_option("--seed", sim_args.seed, "overrides the profile seed");
    simulate->add_option("--out", sim_args.out, "stream file")->required();
    simulate->add_option("--truth", sim_args.truth, "ground-truth file");

    DecodeArgs dec_args;
    auto* decode = app.add_subcommand("decode", "Decode a raw stream");
    decode->add_option("protocol", dec_args.protocol)->required()->check(CLI::IsMember({"hxm", "shimmer"}));
    decode->add_option("--in", dec_args.in)->required();
    decode->add_option("--emit", dec_args.emit)->check(CLI::IsMember({"fields", "summary", "series"}));
    decode->add_option("--adc-span", dec_args.adc_span_mv, "Shimmer ADC span in mV");

    EmgArgs emg_args;
    auto* emg = app.add_subcommand("emg", "EMG tools");
    emg->require_subcommand(1);
    auto* analyze = emg->add_subcommand("analyze", "Quantify an EMG series");
    analyze->add_option("--in", emg_args.in, "one mV value per line")->required();
    analyze->add_option("--right", emg_args.right, "contralateral series for symmetry");
    analyze->add_option("--report", emg_args.report, "write the full report as JSON");
    analyze->add_option("--rate", emg_args.rate_hz, "sample rate in Hz");
    analyze->add_option("--threshold", emg_args.threshold_mv, "activation threshold in mV");

    std::string serve_config;
    auto* serve = app.add_subcommand("serve", "Run the ingestion service");
    serve->add_option("--config", serve_config)->required();

    std::string session_config;
    bool post = false;
    auto* session = app.add_subcommand("session", "Record a session from the configured sources");
    session->add_option("--config", session_config)->required();
    session->add_flag("--post", post, "upload the session when it ends");

    ShareArgs share_args;
    auto* share = app.add_subcommand("share", "Post a workout status to a webhook");
    share->add_option("--workout", share_args.workout)->required();
    share->add_option("--webhook", share_args.webhook)->required();
    share->add_option("--config", share_args.config, "gateway config supplying endpoint, token, user");
    share->add_option("--endpoint", share_args.endpoint);
    share->add_option("--token", share_args.token);
    share->add_option("--user", share_args.user);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : validation;
    }

    try {
        if (*simulate) return run_simulate(sim_args);
        if (*decode) return run_decode(dec_args);
        if (*analyze) return run_emg(emg_args);
        if (*serve) return run_serve(serve_config);
        if (*session) return run_session_cmd(session_config, post);
        if (*share) return run_share(share_args);
    } catch (const Failure& f) {
        std::cerr << "bsn: " << f.message << '\n';
        return f.code;
    } catch (const GatewayError& e) {
        std::cerr << "bsn: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const StoreError& e) {
        std::cerr << "bsn: " << e.what() << '\n';
        return io;
    } catch (const std::invalid_argument& e) {
        // sim::SimError, EmgError
        std::cerr << "bsn: " << e.what() << '\n';
        return validation;
    } catch (const ConfigError& e) {
        std::cerr << "bsn: " << e.what() << '\n';
        return validation;
    } catch (const std::exception& e) {
        std::cerr << "bsn: " << e.what() << '\n';
        return io;
    }
    return validation;
}
