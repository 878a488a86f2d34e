#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsn/records.hpp"

struct sqlite3;

namespace bsn {

class StoreError : public std::runtime_error {
public:
    enum class Kind {
        duplicate_team_name,
        unknown_user,
        unknown_team,
        unknown_workout,
        malformed_samples,
        invalid_argument,
        storage,
    };
    StoreError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

enum class LeaderboardMetric { total_duration_s, workout_count, total_distance_m, avg_hr_bpm };

const char* to_string(LeaderboardMetric m);
std::optional<LeaderboardMetric> leaderboard_metric_from_string(const std::string& s);

/// Inclusive bounds on Workout::started_at; unset bounds are open.
struct TimeRange {
    std::optional<std::int64_t> from;
    std::optional<std::int64_t> to;

    bool contains(std::int64_t t) const {
        return (!from || t >= *from) && (!to || t <= *to);
    }
};

struct LeaderboardRow {
    std::string user_id;
    std::string display_name;
    double value = 0.0;
    bool operator==(const LeaderboardRow&) const = default;
};

struct InsertResult {
    std::string workout_id;
    bool created = false;
};

struct ShareDelivery {
    std::int64_t delivery_id = 0;
    std::string workout_id;
    std::string target;
    std::string text;
    int status_code = 0;  // 0 when the target could not be reached
    bool delivered = false;
    std::int64_t attempted_at = 0;
};

struct TableCounts {
    std::uint64_t users = 0;
    std::uint64_t teams = 0;
    std::uint64_t memberships = 0;
    std::uint64_t workouts = 0;
    std::uint64_t samples = 0;
    std::uint64_t share_deliveries = 0;
    bool operator==(const TableCounts&) const = default;
};

/// Per-member aggregate over the member's workouts in range. Members without
/// workouts score 0. avg_hr_bpm averages the per-workout averages of workouts
/// that carry one.
double aggregate_metric(LeaderboardMetric metric, std::span<const Workout> workouts);

/// Sorts descending by value, ties by display_name then user_id.
void rank_leaderboard(std::vector<LeaderboardRow>& rows);

/// SQLite-backed store for users, teams, workouts and their raw samples.
/// All calls serialize on one connection; safe to share across threads.
class Datastore {
public:
    /// Opens or creates the database file; ":memory:" gives a private store.
    explicit Datastore(const std::string& path = ":memory:");
    ~Datastore();
    Datastore(const Datastore&) = delete;
    Datastore& operator=(const Datastore&) = delete;

    /// Inserts or updates a user. Returns true when the row is new.
    bool upsert_user(const User& user);
    std::optional<User> find_user(const std::string& user_id) const;

    /// Creates a team. An empty team_id gets a fresh UUID.
    Team create_team(const std::string& name, const std::string& team_id = {});
    std::optional<Team> find_team(const std::string& team_id) const;

    /// Adds a membership. Returns false when it already existed.
    bool join_team(const std::string& user_id, const std::string& team_id, std::int64_t joined_at);
    std::vector<std::string> team_members(const std::string& team_id) const;
    bool share_team(const std::string& a, const std::string& b) const;

    /// Atomic and idempotent on workout_id: an existing id returns
    /// created=false and leaves the store untouched.
    InsertResult insert_workout(const Workout& workout, std::span<const SampleRow> samples);
    std::optional<Workout> find_workout(const std::string& workout_id) const;
    /// Samples in the order they were inserted.
    std::vector<SampleRow> samples(const std::string& workout_id) const;

    /// Workouts of a user whose started_at lies in range, oldest first.
    std::vector<Workout> query_history(const std::string& user_id, const TimeRange& range) const;
    std::vector<LeaderboardRow> leaderboard(const std::string& team_id, const TimeRange& range,
                                            LeaderboardMetric metric) const;

    std::int64_t record_share(const ShareDelivery& delivery);
    std::vector<ShareDelivery> share_deliveries(const std::string& workout_id) const;

    TableCounts counts() const;

    /// Line-delimited JSON dump of every table, one object per row. Each
    /// object starts with "table"; rows are in primary-key order.
    void export_dump(std::ostream& out) const;
    /// Loads a dump into this store inside one transaction.
    void import_dump(std::istream& in);
    /// Hex digest of export_dump, for comparing whole-store state.
    std::string digest() const;

    /// Test hook: throws after this many samples have been written by the next
    /// insert_workout, exercising rollback.
    void fail_next_insert_after(std::optional<std::size_t> samples) { fail_after_ = samples; }

private:
    void exec(const char* sql) const;
    void export_locked(std::ostream& out) const;

    sqlite3* db_ = nullptr;
    mutable std::mutex mu_;
    std::optional<std::size_t> fail_after_;
};

}  // namespace bsn
