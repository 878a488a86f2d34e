#include "bsn/datastore.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <sqlite3.h>

#include "bsn/uuid.hpp"
#include "bsn/wire.hpp"

namespace bsn {
namespace {

using OJson = nlohmann::ordered_json;

constexpr const char* kSchema = R"sql(
PRAGMA foreign_keys = ON;
CREATE TABLE IF NOT EXISTS users (
  user_id TEXT PRIMARY KEY,
  display_name TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS user_external_ids (
  user_id TEXT NOT NULL REFERENCES users(user_id) ON DELETE CASCADE,
  provider TEXT NOT NULL,
  external_id TEXT NOT NULL,
  PRIMARY KEY (user_id, provider)
);
CREATE TABLE IF NOT EXISTS teams (
  team_id TEXT PRIMARY KEY,
  name TEXT NOT NULL UNIQUE CHECK (length(name) > 0)
);
CREATE TABLE IF NOT EXISTS users_to_teams (
  user_id TEXT NOT NULL REFERENCES users(user_id),
  team_id TEXT NOT NULL REFERENCES teams(team_id),
  joined_at INTEGER NOT NULL,
  PRIMARY KEY (user_id, team_id)
);
CREATE TABLE IF NOT EXISTS workouts (
  workout_id TEXT PRIMARY KEY,
  user_id TEXT NOT NULL REFERENCES users(user_id),
  started_at INTEGER NOT NULL,
  duration_s REAL NOT NULL CHECK (duration_s >= 0),
  avg_hr_bpm REAL,
  distance_m REAL NOT NULL,
  summary_mismatch INTEGER NOT NULL,
  summary TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS workouts_by_user ON workouts(user_id, started_at);
CREATE TABLE IF NOT EXISTS hr_samples (
  workout_id TEXT NOT NULL REFERENCES workouts(workout_id),
  seq INTEGER NOT NULL,
  channel INTEGER NOT NULL,
  offset_ms INTEGER NOT NULL,
  value REAL NOT NULL,
  PRIMARY KEY (workout_id, seq)
);
CREATE TABLE IF NOT EXISTS distance_samples (
  workout_id TEXT NOT NULL REFERENCES workouts(workout_id),
  seq INTEGER NOT NULL,
  channel INTEGER NOT NULL,
  offset_ms INTEGER NOT NULL,
  value REAL NOT NULL,
  PRIMARY KEY (workout_id, seq)
);
CREATE TABLE IF NOT EXISTS emg_samples (
  workout_id TEXT NOT NULL REFERENCES workouts(workout_id),
  seq INTEGER NOT NULL,
  channel INTEGER NOT NULL,
  offset_ms INTEGER NOT NULL,
  value REAL NOT NULL,
  PRIMARY KEY (workout_id, seq)
);
CREATE TABLE IF NOT EXISTS share_deliveries (
  delivery_id INTEGER PRIMARY KEY AUTOINCREMENT,
  workout_id TEXT NOT NULL REFERENCES workouts(workout_id),
  target TEXT NOT NULL,
  text TEXT NOT NULL,
  status_code INTEGER NOT NULL,
  delivered INTEGER NOT NULL,
  attempted_at INTEGER NOT NULL
);
)sql";

const char* sample_table(SensorKind k) {
    switch (k) {
        case SensorKind::hr: return "hr_samples";
        case SensorKind::distance: return "distance_samples";
        case SensorKind::emg: return "emg_samples";
    }
    return "hr_samples";
}

[[noreturn]] void fail(sqlite3* db, const std::string& context) {
    throw StoreError(StoreError::Kind::storage, context + ": " + sqlite3_errmsg(db));
}

// Prepared statement with positional binding; finalized on scope exit.
class Stmt {
public:
    Stmt(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
            fail(db, std::string("prepare '") + sql + "'");
        }
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int i, const std::string& v) {
        sqlite3_bind_text(stmt_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
        return *this;
    }
    Stmt& bind(int i, std::int64_t v) {
        sqlite3_bind_int64(stmt_, i, v);
        return *this;
    }
    Stmt& bind(int i, double v) {
        sqlite3_bind_double(stmt_, i, v);
        return *this;
    }
    Stmt& bind(int i, const std::optional<double>& v) {
        if (v) {
            sqlite3_bind_double(stmt_, i, *v);
        } else {
            sqlite3_bind_null(stmt_, i);
        }
        return *this;
    }

    /// True while rows remain.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) {
            return true;
        }
        if (rc == SQLITE_DONE) {
            return false;
        }
        fail(db_, "step");
    }
    void run() {
        while (step()) {
        }
    }
    void reset() {
        sqlite3_reset(stmt_);
        sqlite3_clear_bindings(stmt_);
    }

    std::string text(int col) const {
        const auto* p = sqlite3_column_text(stmt_, col);
        return p ? std::string(reinterpret_cast<const char*>(p)) : std::string();
    }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
    double real(int col) const { return sqlite3_column_double(stmt_, col); }
    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }

private:
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

// Commits on commit(), rolls back otherwise.
class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) {
        if (sqlite3_exec(db_, "BEGIN IMMEDIATE", nullptr, nullptr, nullptr) != SQLITE_OK) {
            fail(db_, "begin");
        }
    }
    ~Transaction() {
        if (!done_) {
            sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
        }
    }
    void commit() {
        if (sqlite3_exec(db_, "COMMIT", nullptr, nullptr, nullptr) != SQLITE_OK) {
            fail(db_, "commit");
        }
        done_ = true;
    }

private:
    sqlite3* db_;
    bool done_ = false;
};

bool exists(sqlite3* db, const char* sql, const std::string& key) {
    Stmt s(db, sql);
    s.bind(1, key);
    return s.step();
}

Workout workout_from_row(Stmt& s) {
    Workout w;
    w.workout_id = s.text(0);
    w.user_id = s.text(1);
    w.started_at = s.integer(2);
    w.duration_s = s.real(3);
    w.summary_mismatch = s.integer(4) != 0;
    w.summary = wire::summary_from_json(wire::parse(s.text(5)));
    return w;
}

constexpr const char* kWorkoutColumns =
    "SELECT workout_id, user_id, started_at, duration_s, summary_mismatch, summary FROM workouts ";

TimeRange checked(const TimeRange& range) {
    if (range.from && range.to && *range.from > *range.to) {
        throw StoreError(StoreError::Kind::invalid_argument, "range 'from' is after 'to'");
    }
    return range;
}

}  // namespace

const char* to_string(LeaderboardMetric m) {
    switch (m) {
        case LeaderboardMetric::total_duration_s: return "total_duration_s";
        case LeaderboardMetric::workout_count: return "workout_count";
        case LeaderboardMetric::total_distance_m: return "total_distance_m";
        case LeaderboardMetric::avg_hr_bpm: return "avg_hr_bpm";
    }
    return "unknown";
}

std::optional<LeaderboardMetric> leaderboard_metric_from_string(const std::string& s) {
    for (auto m : {LeaderboardMetric::total_duration_s, LeaderboardMetric::workout_count,
                   LeaderboardMetric::total_distance_m, LeaderboardMetric::avg_hr_bpm}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    return std::nullopt;
}

double aggregate_metric(LeaderboardMetric metric, std::span<const Workout> workouts) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& w : workouts) {
        switch (metric) {
            case LeaderboardMetric::total_duration_s: total += w.duration_s; break;
            case LeaderboardMetric::workout_count: total += 1.0; break;
            case LeaderboardMetric::total_distance_m: total += w.summary.distance_m; break;
            case LeaderboardMetric::avg_hr_bpm:
                if (w.summary.avg_hr_bpm) {
                    total += *w.summary.avg_hr_bpm;
                    ++n;
                }
                break;
        }
    }
    if (metric == LeaderboardMetric::avg_hr_bpm) {
        return n == 0 ? 0.0 : total / static_cast<double>(n);
    }
    return total;
}

void rank_leaderboard(std::vector<LeaderboardRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.display_name != b.display_name) return a.display_name < b.display_name;
        return a.user_id < b.user_id;
    });
}

Datastore::Datastore(const std::string& path) {
    const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
    if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
        const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        throw StoreError(StoreError::Kind::storage, "open " + path + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec(kSchema);
}

Datastore::~Datastore() { sqlite3_close(db_); }

void Datastore::exec(const char* sql) const {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        const std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw StoreError(StoreError::Kind::storage, msg);
    }
}

bool Datastore::upsert_user(const User& user) {
    if (user.user_id.empty() || user.display_name.empty()) {
        throw StoreError(StoreError::Kind::invalid_argument, "user needs an id and a display name");
    }
    std::lock_guard<std::mutex> lock(mu_);
    Transaction tx(db_);
    const bool fresh = !exists(db_, "SELECT 1 FROM users WHERE user_id = ?", user.user_id);
    Stmt up(db_,
            "INSERT INTO users (user_id, display_name) VALUES (?, ?) "
            "ON CONFLICT(user_id) DO UPDATE SET display_name = excluded.display_name");
    up.bind(1, user.user_id).bind(2, user.display_name).run();
    Stmt clear(db_, "DELETE FROM user_external_ids WHERE user_id = ?");
    clear.bind(1, user.user_id).run();
    Stmt ext(db_, "INSERT INTO user_external_ids (user_id, provider, external_id) VALUES (?, ?, ?)");
    for (const auto& [provider, id] : user.external_ids) {
        ext.bind(1, user.user_id).bind(2, provider).bind(3, id).run();
        ext.reset();
    }
    tx.commit();
    return fresh;
}

std::optional<User> Datastore::find_user(const std::string& user_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    Stmt s(db_, "SELECT display_name FROM users WHERE user_id = ?");
    s.bind(1, user_id);
    if (!s.step()) {
        return std::nullopt;
    }
    User u{user_id, s.text(0), {}};
    Stmt ext(db_, "SELECT provider, external_id FROM user_external_ids WHERE user_id = ?");
    ext.bind(1, user_id);
    while (ext.step()) {
        u.external_ids[ext.text(0)] = ext.text(1);
    }
    return u;
}

Team Datastore::create_team(const std::string& name, const std::string& team_id) {
    if (name.empty()) {
        throw StoreError(StoreError::Kind::invalid_argument, "team name must not be empty");
    }
    Team team{team_id.empty() ? new_uuid() : team_id, name};
    std::lock_guard<std::mutex> lock(mu_);
    Transaction tx(db_);
    if (exists(db_, "SELECT 1 FROM teams WHERE name = ?", name)) {
        throw StoreError(StoreError::Kind::duplicate_team_name, "team name '" + name + "' is taken");
    }
    if (exists(db_, "SELECT 1 FROM teams WHERE team_id = ?", team.team_id)) {
        throw StoreError(StoreError::Kind::invalid_argument, "team id '" + team.team_id + "' exists");
    }
    Stmt s(db_, "INSERT INTO teams (team_id, name) VALUES (?, ?)");
    s.bind(1, team.team_id).bind(2, team.name).run();
    tx.commit();
    return team;
}

std::optional<Team> Datastore::find_team(const std::string& team_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    Stmt s(db_, "SELECT name FROM teams WHERE team_id = ?");
    s.bind(1, team_id);
    if (!s.step()) {
        return std::nullopt;
    }
    return Team{team_id, s.text(0)};
}

bool Datastore::join_team(const std::string& user_id, const std::string& team_id, std::int64_t joined_at) {
    std::lock_guard<std::mutex> lock(mu_);
    Transaction tx(db_);
    if (!exists(db_, "SELECT 1 FROM users WHERE user_id = ?", user_id)) {
        throw StoreError(StoreError::Kind::unknown_user, "unknown user '" + user_id + "'");
    }
    if (!exists(db_, "SELECT 1 FROM teams WHERE team_id = ?", team_id)) {
        throw StoreError(StoreError::Kind::unknown_team, "unknown team '" + team_id + "'");
    }
    Stmt s(db_, "INSERT OR IGNORE INTO users_to_teams (user_id, team_id, joined_at) VALUES (?, ?, ?)");
    s.bind(1, user_id).bind(2, team_id).bind(3, joined_at).run();
    const bool added = sqlite3_changes(db_) > 0;
    tx.commit();
    return added;
}

std::vector<std::string> Datastore::team_members(const std::string& team_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    Stmt s(db_, "SELECT user_id FROM users_to_teams WHERE team_id = ? ORDER BY user_id");
    s.bind(1, team_id);
    std::vector<std::string> out;
    while (s.step()) {
        out.push_back(s.text(0));
    }
    return out;
}

bool Datastore::share_team(const std::string& a, const std::string& b) const {
    std::lock_guard<std::mutex> lock(mu_);
    Stmt s(db_,
           "SELECT 1 FROM users_to_teams x JOIN users_to_teams y ON x.team_id = y.team_id "
           "WHERE x.user_id = ? AND y.user_id = ? LIMIT 1");
    s.bind(1, a).bind(2, b);
    return s.step();
}

InsertResult Datastore::insert_workout(const Workout& workout, std::span<const SampleRow> samples) {
    if (workout.workout_id.empty()) {
        throw StoreError(StoreError::Kind::invalid_argument, "workout id must not be empty");
    }
    if (!(workout.duration_s >= 0.0) || !std::isfinite(workout.duration_s)) {
        throw StoreError(StoreError::Kind::invalid_argument, "duration must be a non-negative number");
    }
    if (const auto bad = first_offset_violation(samples)) {
        throw StoreError(StoreError::Kind::malformed_samples,
                         "sample " + std::to_string(*bad) + " goes back in time");
    }
    for (const auto& r : samples) {
        if (!std::isfinite(r.value)) {
            throw StoreError(StoreError::Kind::malformed_samples, "sample value is not finite");
        }
    }

    std::lock_guard<std::mutex> lock(mu_);
    const auto fail_after = std::exchange(fail_after_, std::nullopt);
    Transaction tx(db_);
    if (exists(db_, "SELECT 1 FROM workouts WHERE workout_id = ?", workout.workout_id)) {
        return {workout.workout_id, false};
    }
    if (!exists(db_, "SELECT 1 FROM users WHERE user_id = ?", workout.user_id)) {
        throw StoreError(StoreError::Kind::unknown_user, "unknown user '" + workout.user_id + "'");
    }
    Stmt w(db_,
           "INSERT INTO workouts (workout_id, user_id, started_at, duration_s, avg_hr_bpm, distance_m, "
           "summary_mismatch, summary) VALUES (?, ?, ?, ?, ?, ?, ?, ?)");
    w.bind(1, workout.workout_id)
        .bind(2, workout.user_id)
        .bind(3, workout.started_at)
        .bind(4, workout.duration_s)
        .bind(5, workout.summary.avg_hr_bpm)
        .bind(6, workout.summary.distance_m)
        .bind(7, std::int64_t{workout.summary_mismatch ? 1 : 0})
        .bind(8, wire::to_json(workout.summary).dump())
        .run();

    Stmt hr(db_, "INSERT INTO hr_samples VALUES (?, ?, ?, ?, ?)");
    Stmt dist(db_, "INSERT INTO distance_samples VALUES (?, ?, ?, ?, ?)");
    Stmt emg(db_, "INSERT INTO emg_samples VALUES (?, ?, ?, ?, ?)");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (fail_after && i == *fail_after) {
            throw StoreError(StoreError::Kind::storage, "injected failure");
        }
        const SampleRow& r = samples[i];
        Stmt& s = r.sensor == SensorKind::hr ? hr : r.sensor == SensorKind::distance ? dist : emg;
        s.bind(1, workout.workout_id)
            .bind(2, static_cast<std::int64_t>(i))
            .bind(3, static_cast<std::int64_t>(r.channel))
            .bind(4, r.offset_ms)
            .bind(5, r.value)
            .run();
        s.reset();
    }
    tx.commit();
    return {workout.workout_id, true};
}

std::optional<Workout> Datastore::find_workout(const std::string& workout_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    Stmt s(db_, (std::string(kWorkoutColumns) + "WHERE workout_id = ?").c_str());
    s.bind(1, workout_id);
    if (!s.step()) {
        return std::nullopt;
    }
    return workout_from_row(s);
}

std::vector<SampleRow> Datastore::samples(const std::string& workout_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    Stmt s(db_,
           "SELECT 0, seq, channel, offset_ms, value FROM hr_samples WHERE workout_id = ?1 "
           "UNION ALL SELECT 1, seq, channel, offset_ms, value FROM distance_samples WHERE workout_id = ?1 "
           "UNION ALL SELECT 2, seq, channel, offset_ms, value FROM emg_samples WHERE workout_id = ?1 "
           "ORDER BY 2");
    s.bind(1, workout_id);
    std::vector<SampleRow> out;
    while (s.step()) {
        SampleRow r;
        r.sensor = static_cast<SensorKind>(s.integer(0));
        r.channel = static_cast<std::uint32_t>(s.integer(2));
        r.offset_ms = s.integer(3);
        r.value = s.real(4);
        out.push_back(r);
    }
    return out;
}

std::vector<Workout> Datastore::query_history(const std::string& user_id, const TimeRange& range) const {
    const TimeRange r = checked(range);
    std::lock_guard<std::mutex> lock(mu_);
    if (!exists(db_, "SELECT 1 FROM users WHERE user_id = ?", user_id)) {
        throw StoreError(StoreError::Kind::unknown_user, "unknown user '" + user_id + "'");
    }
    Stmt s(db_, (std::string(kWorkoutColumns) +
                 "WHERE user_id = ?1 AND (?2 IS NULL OR started_at >= ?2) AND (?3 IS NULL OR started_at <= ?3) "
                 "ORDER BY started_at, workout_id")
                    .c_str());
    s.bind(1, user_id);
    if (r.from) s.bind(2, *r.from);
    if (r.to) s.bind(3, *r.to);
    std::vector<Workout> out;
    while (s.step()) {
        out.push_back(workout_from_row(s));
    }
    return out;
}

std::vector<LeaderboardRow> Datastore::leaderboard(const std::string& team_id, const TimeRange& range,
                                                   LeaderboardMetric metric) const {
    checked(range);
    if (!find_team(team_id)) {
        throw StoreError(StoreError::Kind::unknown_team, "unknown team '" + team_id + "'");
    }
    std::vector<LeaderboardRow> rows;
    {
        std::lock_guard<std::mutex> lock(mu_);
        Stmt s(db_,
               "SELECT u.user_id, u.display_name FROM users_to_teams m JOIN users u ON u.user_id = m.user_id "
               "WHERE m.team_id = ?");
        s.bind(1, team_id);
        while (s.step()) {
            rows.push_back({s.text(0), s.text(1), 0.0});
        }
    }
    for (auto& row : rows) {
        const auto history = query_history(row.user_id, range);
        row.value = aggregate_metric(metric, history);
    }
    rank_leaderboard(rows);
    return rows;
}

std::int64_t Datastore::record_share(const ShareDelivery& d) {
    std::lock_guard<std::mutex> lock(mu_);
    Stmt s(db_,
           "INSERT INTO share_deliveries (workout_id, target, text, status_code, delivered, attempted_at) "
           "VALUES (?, ?, ?, ?, ?, ?)");
    s.bind(1, d.workout_id)
        .bind(2, d.target)
        .bind(3, d.text)
        .bind(4, std::int64_t{d.status_code})
        .bind(5, std::int64_t{d.delivered ? 1 : 0})
        .bind(6, d.attempted_at);
    try {
        s.run();
    } catch (const StoreError&) {
        if (!exists(db_, "SELECT 1 FROM workouts WHERE workout_id = ?", d.workout_id)) {
            throw StoreError(StoreError::Kind::unknown_workout, "unknown workout '" + d.workout_id + "'");
        }
        throw;
    }
    return sqlite3_last_insert_rowid(db_);
}

std::vector<ShareDelivery> Datastore::share_deliveries(const std::string& workout_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    Stmt s(db_,
           "SELECT delivery_id, target, text, status_code, delivered, attempted_at FROM share_deliveries "
           "WHERE workout_id = ? ORDER BY delivery_id");
    s.bind(1, workout_id);
    std::vector<ShareDelivery> out;
    while (s.step()) {
        out.push_back({s.integer(0), workout_id, s.text(1), s.text(2), static_cast<int>(s.integer(3)),
                       s.integer(4) != 0, s.integer(5)});
    }
    return out;
}

TableCounts Datastore::counts() const {
    std::lock_guard<std::mutex> lock(mu_);
    auto count = [&](const char* sql) {
        Stmt s(db_, sql);
        s.step();
        return static_cast<std::uint64_t>(s.integer(0));
    };
    TableCounts c;
    c.users = count("SELECT COUNT(*) FROM users");
    c.teams = count("SELECT COUNT(*) FROM teams");
    c.memberships = count("SELECT COUNT(*) FROM users_to_teams");
    c.workouts = count("SELECT COUNT(*) FROM workouts");
    c.samples = count(
        "SELECT (SELECT COUNT(*) FROM hr_samples) + (SELECT COUNT(*) FROM distance_samples) + "
        "(SELECT COUNT(*) FROM emg_samples)");
    c.share_deliveries = count("SELECT COUNT(*) FROM share_deliveries");
    return c;
}

// Dump tables in dependency order so an import can replay lines in sequence.
void Datastore::export_locked(std::ostream& out) const {
    auto emit = [&](const OJson& row) { out << row.dump() << '\n'; };
    {
        Stmt s(db_, "SELECT user_id, display_name FROM users ORDER BY user_id");
        while (s.step()) {
            emit({{"table", "users"}, {"user_id", s.text(0)}, {"display_name", s.text(1)}});
        }
    }
    {
        Stmt s(db_, "SELECT user_id, provider, external_id FROM user_external_ids ORDER BY user_id, provider");
        while (s.step()) {
            emit({{"table", "user_external_ids"},
                  {"user_id", s.text(0)},
                  {"provider", s.text(1)},
                  {"external_id", s.text(2)}});
        }
    }
    {
        Stmt s(db_, "SELECT team_id, name FROM teams ORDER BY team_id");
        while (s.step()) {
            emit({{"table", "teams"}, {"team_id", s.text(0)}, {"name", s.text(1)}});
        }
    }
    {
        Stmt s(db_, "SELECT user_id, team_id, joined_at FROM users_to_teams ORDER BY user_id, team_id");
        while (s.step()) {
            emit({{"table", "users_to_teams"},
                  {"user_id", s.text(0)},
                  {"team_id", s.text(1)},
                  {"joined_at", s.integer(2)}});
        }
    }
    {
        Stmt s(db_, (std::string(kWorkoutColumns) + "ORDER BY workout_id").c_str());
        while (s.step()) {
            emit({{"table", "workouts"},
                  {"workout_id", s.text(0)},
                  {"user_id", s.text(1)},
                  {"started_at", s.integer(2)},
                  {"duration_s", s.real(3)},
                  {"summary_mismatch", s.integer(4) != 0},
                  {"summary", OJson::parse(s.text(5))}});
        }
    }
    for (auto kind : {SensorKind::hr, SensorKind::distance, SensorKind::emg}) {
        const std::string table = sample_table(kind);
        Stmt s(db_, ("SELECT workout_id, seq, channel, offset_ms, value FROM " + table +
                     " ORDER BY workout_id, seq")
                        .c_str());
        while (s.step()) {
            emit({{"table", table},
                  {"workout_id", s.text(0)},
                  {"seq", s.integer(1)},
                  {"channel", s.integer(2)},
                  {"offset_ms", s.integer(3)},
                  {"value", s.real(4)}});
        }
    }
    {
        Stmt s(db_,
               "SELECT delivery_id, workout_id, target, text, status_code, delivered, attempted_at "
               "FROM share_deliveries ORDER BY delivery_id");
        while (s.step()) {
            emit({{"table", "share_deliveries"},
                  {"delivery_id", s.integer(0)},
                  {"workout_id", s.text(1)},
                  {"target", s.text(2)},
                  {"text", s.text(3)},
                  {"status_code", s.integer(4)},
                  {"delivered", s.integer(5) != 0},
                  {"attempted_at", s.integer(6)}});
        }
    }
}

void Datastore::export_dump(std::ostream& out) const {
    std::lock_guard<std::mutex> lock(mu_);
    export_locked(out);
}

void Datastore::import_dump(std::istream& in) {
    std::lock_guard<std::mutex> lock(mu_);
    Transaction tx(db_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = OJson::parse(line);
            const std::string table = j.at("table").get<std::string>();
            if (table == "users") {
                Stmt s(db_, "INSERT INTO users VALUES (?, ?)");
                s.bind(1, j.at("user_id").get<std::string>()).bind(2, j.at("display_name").get<std::string>()).run();
            } else if (table == "user_external_ids") {
                Stmt s(db_, "INSERT INTO user_external_ids VALUES (?, ?, ?)");
                s.bind(1, j.at("user_id").get<std::string>())
                    .bind(2, j.at("provider").get<std::string>())
                    .bind(3, j.at("external_id").get<std::string>())
                    .run();
            } else if (table == "teams") {
                Stmt s(db_, "INSERT INTO teams VALUES (?, ?)");
                s.bind(1, j.at("team_id").get<std::string>()).bind(2, j.at("name").get<std::string>()).run();
            } else if (table == "users_to_teams") {
                Stmt s(db_, "INSERT INTO users_to_teams VALUES (?, ?, ?)");
                s.bind(1, j.at("user_id").get<std::string>())
                    .bind(2, j.at("team_id").get<std::string>())
                    .bind(3, j.at("joined_at").get<std::int64_t>())
                    .run();
            } else if (table == "workouts") {
                const auto summary = wire::summary_from_json(wire::Json::parse(j.at("summary").dump()));
                Stmt s(db_, "INSERT INTO workouts VALUES (?, ?, ?, ?, ?, ?, ?, ?)");
                s.bind(1, j.at("workout_id").get<std::string>())
                    .bind(2, j.at("user_id").get<std::string>())
                    .bind(3, j.at("started_at").get<std::int64_t>())
                    .bind(4, j.at("duration_s").get<double>())
                    .bind(5, summary.avg_hr_bpm)
                    .bind(6, summary.distance_m)
                    .bind(7, std::int64_t{j.at("summary_mismatch").get<bool>() ? 1 : 0})
                    .bind(8, j.at("summary").dump())
                    .run();
            } else if (table == "hr_samples" || table == "distance_samples" || table == "emg_samples") {
                Stmt s(db_, ("INSERT INTO " + table + " VALUES (?, ?, ?, ?, ?)").c_str());
                s.bind(1, j.at("workout_id").get<std::string>())
                    .bind(2, j.at("seq").get<std::int64_t>())
                    .bind(3, j.at("channel").get<std::int64_t>())
                    .bind(4, j.at("offset_ms").get<std::int64_t>())
                    .bind(5, j.at("value").get<double>())
                    .run();
            } else if (table == "share_deliveries") {
                Stmt s(db_, "INSERT INTO share_deliveries VALUES (?, ?, ?, ?, ?, ?, ?)");
                s.bind(1, j.at("delivery_id").get<std::int64_t>())
                    .bind(2, j.at("workout_id").get<std::string>())
                    .bind(3, j.at("target").get<std::string>())
                    .bind(4, j.at("text").get<std::string>())
                    .bind(5, j.at("status_code").get<std::int64_t>())
                    .bind(6, std::int64_t{j.at("delivered").get<bool>() ? 1 : 0})
                    .bind(7, j.at("attempted_at").get<std::int64_t>())
                    .run();
            } else {
                throw StoreError(StoreError::Kind::invalid_argument, "unknown table '" + table + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw StoreError(StoreError::Kind::invalid_argument,
                             "dump line " + std::to_string(line_no) + ": " + e.what());
        } catch (const wire::WireError& e) {
            throw StoreError(StoreError::Kind::invalid_argument,
                             "dump line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    tx.commit();
}

std::string Datastore::digest() const {
    std::ostringstream dump;
    export_dump(dump);
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << std::hash<std::string>{}(dump.str());
    return hex.str();
}

}  // namespace bsn
