#include "bsn/service.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>

#include <httplib.h>

#include "bsn/status.hpp"
#include "bsn/uuid.hpp"
#include "bsn/wire.hpp"

namespace bsn {
namespace {

using wire::Json;

std::int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

ApiResponse json_response(int status, const Json& body) { return {status, body.dump(), {}}; }

ApiResponse error(int status, const std::string& message) {
    return json_response(status, Json{{"error", message}});
}

int status_for(StoreError::Kind k) {
    switch (k) {
        case StoreError::Kind::duplicate_team_name: return 409;
        case StoreError::Kind::unknown_user:
        case StoreError::Kind::unknown_team:
        case StoreError::Kind::unknown_workout: return 404;
        case StoreError::Kind::malformed_samples:
        case StoreError::Kind::invalid_argument: return 422;
        case StoreError::Kind::storage: return 500;
    }
    return 500;
}

std::vector<std::string> segments(const std::string& path) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < path.size()) {
        const std::size_t next = path.find('/', pos);
        const std::string part = path.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (!part.empty()) {
            out.push_back(part);
        }
        if (next == std::string::npos) {
            break;
        }
        pos = next + 1;
    }
    return out;
}

std::optional<std::int64_t> query_int(const ApiRequest& req, const std::string& key) {
    const auto it = req.query.find(key);
    if (it == req.query.end() || it->second.empty()) {
        return std::nullopt;
    }
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(it->second, &used);
    } catch (const std::exception&) {
        throw wire::WireError("query parameter '" + key + "' must be an integer");
    }
    if (used != it->second.size()) {
        throw wire::WireError("query parameter '" + key + "' must be an integer");
    }
    return v;
}

TimeRange range_of(const ApiRequest& req) {
    TimeRange r{query_int(req, "from"), query_int(req, "to")};
    if (r.from && r.to && *r.from > *r.to) {
        throw wire::WireError("'from' is after 'to'");
    }
    return r;
}

std::string require_field(const Json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body.at(key).is_string() ||
        body.at(key).get<std::string>().empty()) {
        throw wire::WireError(std::string("field '") + key + "' must be a non-empty string");
    }
    return body.at(key).get<std::string>();
}

bool summary_deviates(const SessionSummary& client, const SampleDerived& server) {
    if (client.avg_hr_bpm.has_value() != server.avg_hr_bpm.has_value()) {
        return true;
    }
    if (client.avg_hr_bpm && std::fabs(*client.avg_hr_bpm - *server.avg_hr_bpm) > kAvgHrToleranceBpm) {
        return true;
    }
    return std::fabs(client.distance_m - server.distance_m.value_or(0.0)) > kDistanceToleranceM;
}

}  // namespace

TokenTable load_token_table(const std::filesystem::path& path) {
    const KeyValues kv = KeyValues::load(path);
    return TokenTable(kv.entries().begin(), kv.entries().end());
}

ServiceConfig load_service_config(const KeyValues& kv, const std::filesystem::path& base_dir) {
    ServiceConfig c;
    const std::string listen = kv.get("listen", "127.0.0.1:8080");
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) {
        throw ConfigError("listen must be host:port");
    }
    c.host = listen.substr(0, colon);
    const std::uint64_t port = parse_u64(listen.substr(colon + 1));
    if (port > 65535) {
        throw ConfigError("listen port out of range");
    }
    c.port = static_cast<int>(port);
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() || p == ":memory:" ? path : base_dir / path;
    };
    c.db_path = resolve(kv.get("db", "bsn.db")).string();
    if (kv.has("tokens")) {
        c.tokens = load_token_table(resolve(kv.get("tokens")));
    }
    return c;
}

IngestService::IngestService(Datastore& store, TokenTable tokens, Transport& webhooks)
    : store_(store), tokens_(std::move(tokens)), webhooks_(webhooks) {}

bool IngestService::may_see(const Principal& who, const std::string& owner) const {
    return who.admin || who.user_id == owner || store_.share_team(who.user_id, owner);
}

ApiResponse IngestService::handle(const ApiRequest& request) {
    const std::string request_id = "req-" + std::to_string(next_request_++);
    auto finish = [&](ApiResponse r) {
        r.request_id = request_id;
        return r;
    };

    const auto auth = request.headers.find("authorization");
    const std::string prefix = "Bearer ";
    if (auth == request.headers.end() || auth->second.rfind(prefix, 0) != 0) {
        return finish(error(401, "missing bearer token"));
    }
    const auto tok = tokens_.find(auth->second.substr(prefix.size()));
    if (tok == tokens_.end()) {
        return finish(error(401, "unknown token"));
    }
    const Principal who{tok->second, tok->second == kAdminPrincipal};

    std::string replay_key;
    if (request.method == "POST") {
        const auto key = request.headers.find("idempotency-key");
        if (key != request.headers.end() && !key->second.empty()) {
            replay_key = who.user_id + '\n' + request.path + '\n' + key->second;
            std::lock_guard<std::mutex> lock(replay_mu_);
            const auto hit = replays_.find(replay_key);
            if (hit != replays_.end()) {
                return finish(hit->second);
            }
        }
    }

    ApiResponse response;
    try {
        response = dispatch(request, who);
    } catch (const wire::WireError& e) {
        response = error(422, e.what());
    } catch (const StoreError& e) {
        response = error(status_for(e.kind()), e.what());
    } catch (const std::exception& e) {
        response = error(500, e.what());
    }
    if (!replay_key.empty() && response.status >= 200 && response.status < 300) {
        std::lock_guard<std::mutex> lock(replay_mu_);
        replays_.emplace(replay_key, response);
    }
    return finish(response);
}

ApiResponse IngestService::dispatch(const ApiRequest& req, const Principal& who) {
    const auto p = segments(req.path);
    if (p.empty() || p[0] != "v1") {
        return error(404, "no such endpoint");
    }
    const bool get = req.method == "GET";
    const bool post = req.method == "POST";
    if (p.size() == 2 && post) {
        if (p[1] == "users") return post_user(req, who);
        if (p[1] == "teams") return post_team(req, who);
        if (p[1] == "workouts") return post_workout(req, who);
        if (p[1] == "share") return post_share(req, who);
    }
    if (p.size() == 4 && p[1] == "teams" && p[3] == "members" && post) {
        return post_member(p[2], req, who);
    }
    if (p.size() == 4 && p[1] == "teams" && p[3] == "leaderboard" && get) {
        return get_leaderboard(p[2], req, who);
    }
    if (p.size() == 4 && p[1] == "users" && p[3] == "workouts" && get) {
        return get_history(p[2], req, who);
    }
    if (p.size() == 3 && p[1] == "workouts" && get) {
        return get_workout(p[2], false, who);
    }
    if (p.size() == 4 && p[1] == "workouts" && p[3] == "samples" && get) {
        return get_workout(p[2], true, who);
    }
    return error(404, "no such endpoint");
}

ApiResponse IngestService::post_user(const ApiRequest& req, const Principal& who) {
    User user = wire::user_from_json(wire::parse(req.body));
    if (user.user_id.empty()) {
        if (!who.admin) {
            return error(403, "only administrators may register users without an id");
        }
        user.user_id = new_uuid();
    }
    if (!who.admin && who.user_id != user.user_id) {
        return error(403, "token may only register its own user");
    }
    const bool created = store_.upsert_user(user);
    return json_response(created ? 201 : 200, wire::to_json(user));
}

ApiResponse IngestService::post_team(const ApiRequest& req, const Principal&) {
    const Json body = wire::parse(req.body);
    const std::string name = require_field(body, "name");
    const std::string id = body.contains("team_id") ? require_field(body, "team_id") : std::string();
    return json_response(201, wire::to_json(store_.create_team(name, id)));
}

ApiResponse IngestService::post_member(const std::string& team_id, const ApiRequest& req,
                                       const Principal& who) {
    const std::string user_id = require_field(wire::parse(req.body), "user_id");
    if (!who.admin && who.user_id != user_id) {
        return error(403, "token may only add its own user");
    }
    const bool joined = store_.join_team(user_id, team_id, unix_now());
    return json_response(joined ? 201 : 200, Json{{"team_id", team_id}, {"user_id", user_id}, {"joined", joined}});
}

ApiResponse IngestService::post_workout(const ApiRequest& req, const Principal& who) {
    wire::WorkoutUpload up = wire::workout_upload_from_json(wire::parse(req.body));
    if (!who.admin && who.user_id != up.workout.user_id) {
        return error(403, "token may only upload its own workouts");
    }
    if (!store_.find_user(up.workout.user_id)) {
        return error(404, "unknown user '" + up.workout.user_id + "'");
    }
    // Raw samples are authoritative: the stored summary carries the values
    // recomputed from them, and disagreement is flagged rather than refused.
    const SampleDerived derived = derive_from_samples(up.samples);
    up.workout.summary_mismatch = summary_deviates(up.workout.summary, derived);
    up.workout.summary.avg_hr_bpm = derived.avg_hr_bpm;
    up.workout.summary.distance_m = derived.distance_m.value_or(0.0);

    const InsertResult res = store_.insert_workout(up.workout, up.samples);
    const auto stored = store_.find_workout(res.workout_id);
    if (!stored) {
        return error(500, "workout vanished after insert");
    }
    return json_response(res.created ? 201 : 200, Json{{"workout_id", stored->workout_id},
                                                       {"created", res.created},
                                                       {"summary_mismatch", stored->summary_mismatch},
                                                       {"summary", wire::to_json(stored->summary)}});
}

ApiResponse IngestService::get_history(const std::string& user_id, const ApiRequest& req, const Principal& who) {
    const TimeRange range = range_of(req);
    if (!store_.find_user(user_id)) {
        return error(404, "unknown user '" + user_id + "'");
    }
    if (!may_see(who, user_id)) {
        return error(403, "not allowed to read this user's workouts");
    }
    Json list = Json::array();
    for (const auto& w : store_.query_history(user_id, range)) {
        list.push_back(wire::to_json(w));
    }
    return json_response(200, Json{{"user_id", user_id}, {"workouts", list}});
}

ApiResponse IngestService::get_leaderboard(const std::string& team_id, const ApiRequest& req,
                                           const Principal& who) {
    const TimeRange range = range_of(req);
    if (!store_.find_team(team_id)) {
        return error(404, "unknown team '" + team_id + "'");
    }
    const auto metric_it = req.query.find("metric");
    const auto metric =
        metric_it == req.query.end() ? std::nullopt : leaderboard_metric_from_string(metric_it->second);
    if (!metric) {
        return error(422, "metric must be one of total_duration_s, workout_count, total_distance_m, avg_hr_bpm");
    }
    if (!who.admin) {
        const auto members = store_.team_members(team_id);
        if (std::find(members.begin(), members.end(), who.user_id) == members.end()) {
            return error(403, "only team members may read the leaderboard");
        }
    }
    Json rows = Json::array();
    for (const auto& r : store_.leaderboard(team_id, range, *metric)) {
        rows.push_back({{"user_id", r.user_id}, {"display_name", r.display_name}, {"value", r.value}});
    }
    return json_response(200, Json{{"team_id", team_id}, {"metric", to_string(*metric)}, {"rows", rows}});
}

ApiResponse IngestService::get_workout(const std::string& workout_id, bool with_samples, const Principal& who) {
    const auto w = store_.find_workout(workout_id);
    if (!w) {
        return error(404, "unknown workout '" + workout_id + "'");
    }
    if (!may_see(who, w->user_id)) {
        return error(403, "not allowed to read this workout");
    }
    if (!with_samples) {
        return json_response(200, wire::to_json(*w));
    }
    Json rows = Json::array();
    for (const auto& r : store_.samples(workout_id)) {
        rows.push_back(wire::to_json(r));
    }
    return json_response(200, Json{{"workout_id", workout_id}, {"samples", rows}});
}

ApiResponse IngestService::post_share(const ApiRequest& req, const Principal& who) {
    const Json body = wire::parse(req.body);
    const std::string user_id = require_field(body, "user_id");
    const std::string workout_id = require_field(body, "workout_id");
    const std::string target = require_field(body, "target");
    if (!who.admin && who.user_id != user_id) {
        return error(403, "token may only share its own workouts");
    }
    const auto w = store_.find_workout(workout_id);
    if (!w || w->user_id != user_id) {
        return error(404, "unknown workout '" + workout_id + "' for user '" + user_id + "'");
    }
    try {
        parse_url(target);
    } catch (const std::invalid_argument& e) {
        return error(422, e.what());
    }
    const std::string text = format_status(w->summary);

    HttpRequest hook;
    hook.method = "POST";
    hook.url = target;
    hook.headers["Content-Type"] = "application/json";
    hook.body = Json{{"user_id", user_id}, {"workout_id", workout_id}, {"text", text}}.dump();
    const HttpResponse res = webhooks_.send(hook);

    ShareDelivery d;
    d.workout_id = workout_id;
    d.target = target;
    d.text = text;
    d.status_code = res.status;
    d.delivered = res.status >= 200 && res.status < 300;
    d.attempted_at = unix_now();
    d.delivery_id = store_.record_share(d);

    Json out{{"delivery_id", d.delivery_id},
             {"delivered", d.delivered},
             {"status_code", d.status_code},
             {"text", text}};
    if (!d.delivered) {
        out["error"] = res.reached() ? "webhook answered " + std::to_string(res.status) : "webhook unreachable: " + res.error;
        return json_response(502, out);
    }
    return json_response(200, out);
}

struct HttpServer::Impl {
    IngestService& service;
    httplib::Server server;
    std::thread thread;
};

HttpServer::HttpServer(IngestService& service) : impl_(new Impl{service, {}, {}}) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) {
            r.query.emplace(k, v);
        }
        for (const auto& [k, v] : req.headers) {
            std::string name = k;
            std::transform(name.begin(), name.end(), name.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            r.headers[name] = v;
        }
        r.body = req.body;
        const ApiResponse out = impl_->service.handle(r);
        res.status = out.status;
        res.set_header("X-Request-Id", out.request_id);
        res.set_content(out.body, "application/json");
    };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) {
        throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpServer::wait() {
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

void HttpServer::stop() {
    impl_->server.stop();
    wait();
}

}  // namespace bsn
