#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "bsn/datastore.hpp"
#include "bsn/kv.hpp"
#include "bsn/transport.hpp"

namespace bsn {

/// Bearer token -> user id. The user id "*" marks an administrator token.
using TokenTable = std::map<std::string, std::string>;

inline constexpr const char* kAdminPrincipal = "*";

/// Reads `token=user_id` lines.
TokenTable load_token_table(const std::filesystem::path& path);

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::string db_path = "bsn.db";
    TokenTable tokens;
};

/// Keys: listen (host:port), db, tokens (path to a token file). Relative
/// paths resolve against `base_dir`.
ServiceConfig load_service_config(const KeyValues& kv, const std::filesystem::path& base_dir = {});

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::map<std::string, std::string> headers;  // lower-case names
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string body;  // JSON
    std::string request_id;
};

/// The /v1 ingestion API over a Datastore, independent of any HTTP server.
/// Mutating requests may carry an Idempotency-Key header; a replay with the
/// same key and principal returns the first response without acting again.
/// No lock is held while a share webhook is being called.
class IngestService {
public:
    IngestService(Datastore& store, TokenTable tokens, Transport& webhooks);

    ApiResponse handle(const ApiRequest& request);

private:
    struct Principal {
        std::string user_id;
        bool admin = false;
    };

    ApiResponse dispatch(const ApiRequest& req, const Principal& who);
    ApiResponse post_user(const ApiRequest& req, const Principal& who);
    ApiResponse post_team(const ApiRequest& req, const Principal& who);
    ApiResponse post_member(const std::string& team_id, const ApiRequest& req, const Principal& who);
    ApiResponse post_workout(const ApiRequest& req, const Principal& who);
    ApiResponse get_history(const std::string& user_id, const ApiRequest& req, const Principal& who);
    ApiResponse get_leaderboard(const std::string& team_id, const ApiRequest& req, const Principal& who);
    ApiResponse get_workout(const std::string& workout_id, bool with_samples, const Principal& who);
    ApiResponse post_share(const ApiRequest& req, const Principal& who);

    bool may_see(const Principal& who, const std::string& owner) const;

    Datastore& store_;
    TokenTable tokens_;
    Transport& webhooks_;
    std::atomic<std::uint64_t> next_request_{1};
    std::mutex replay_mu_;
    std::map<std::string, ApiResponse> replays_;  // principal + key -> response
};

/// Serves an IngestService over HTTP on a background thread pool.
class HttpServer {
public:
    explicit HttpServer(IngestService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and starts serving. Returns the bound port.
    int start(const std::string& host, int port);
    /// Blocks until stop() is called from elsewhere.
    void wait();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace bsn
