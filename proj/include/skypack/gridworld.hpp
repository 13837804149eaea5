#pragma once

#include "skypack/grid.hpp"
#include "skypack/radio.hpp"
#include "skypack/rng.hpp"
#include "skypack/tokens.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace skypack {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two special cells (home, cluster, obstacle, NFZ) coincide.
class OverlapError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class OutOfGridError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class NoPathError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Static mission geometry
// ---------------------------------------------------------------------------

/// Periodic no-fly window over absolute time (episode clock + start offset).
struct NfzSchedule {
    GridCell cell{3, 3};
    int period_steps = 40;
    int active_start = 0;
    int active_len = 12;

    friend bool operator==(const NfzSchedule&, const NfzSchedule&) = default;
};

bool nfz_active(const NfzSchedule& schedule, long clock, long start_offset);

struct ClusterSpec {
    int id = 0;
    GridCell cell;

    friend bool operator==(const ClusterSpec&, const ClusterSpec&) = default;
};

struct DisruptionConfig {
    double p_drift = 0.25;
    double p_snr = 0.2;
    std::vector<double> snr_drop_levels_db{15.0, 20.0, 25.0};

    friend bool operator==(const DisruptionConfig&, const DisruptionConfig&) = default;
};

struct MissionConfig {
    int width = 8;
    int height = 8;
    double cell_size_m = 500.0;
    double altitude_m = 100.0;
    GridCell home{4, 4};
    std::vector<ClusterSpec> clusters;
    std::vector<GridCell> obstacles;
    std::optional<NfzSchedule> nfz;
    LinkConfig access_link;
    LinkConfig backhaul_link;
    double access_threshold_bps = 8e6;
    double backhaul_threshold_bps = 5e6;
    int step_budget = 120;
    DisruptionConfig disruptions;
};

MissionConfig default_mission_config();
MissionConfig mission_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const MissionConfig& config);
MissionConfig load_mission_config(const std::string& path);

/// Immutable mission world. Construct through build_world.
struct World {
    int width = 0;
    int height = 0;
    double cell_size_m = 500.0;
    double altitude_m = 100.0;
    GridCell home;
    std::vector<ClusterSpec> clusters;
    std::vector<GridCell> obstacles;
    std::optional<NfzSchedule> nfz;
    LinkConfig access_link;
    LinkConfig backhaul_link;
    double access_threshold_bps = 8e6;
    double backhaul_threshold_bps = 5e6;
    int step_budget = 120;
    DisruptionConfig disruptions;

    bool in_grid(GridCell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    bool is_obstacle(GridCell c) const;
    bool is_nfz_cell(GridCell c) const { return nfz && nfz->cell == c; }
    const ClusterSpec& cluster(int id) const;
};

/// Validates and freezes a mission config. Throws OverlapError, OutOfGridError or ConfigError.
World build_world(const MissionConfig& config);

// ---------------------------------------------------------------------------
// Disruptions
// ---------------------------------------------------------------------------

enum class DisruptionKind { ClusterDrift, SnrDrop };

/// ClusterDrift is revealed when the UAV enters the cluster's 8-neighborhood and
/// moves the cluster by `offset`. SnrDrop is revealed at the first hover waypoint
/// used to serve the cluster and penalizes that waypoint by `snr_drop_db`.
struct Disruption {
    DisruptionKind kind = DisruptionKind::ClusterDrift;
    int cluster = 0;
    GridCell offset;
    double snr_drop_db = 0.0;

    friend bool operator==(const Disruption&, const Disruption&) = default;
};

struct DisruptionSet {
    std::vector<Disruption> items;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
    friend bool operator==(const DisruptionSet&, const DisruptionSet&) = default;
};

std::string to_string(DisruptionKind kind);
nlohmann::json to_json(const DisruptionSet& set);
DisruptionSet disruption_set_from_json(const nlohmann::json& doc);

/// Legal drift destinations: in-grid, not an obstacle, the NFZ cell, Home, or another cluster.
bool drift_target_legal(const World& world, int cluster_id, GridCell target);

DisruptionSet sample_disruptions(std::uint64_t seed, const DisruptionConfig& config, const World& world);

// ---------------------------------------------------------------------------
// Episode state and motion
// ---------------------------------------------------------------------------

enum class Outcome { Moved, Blocked, Served, ServeFailed, Idle };
std::string to_string(Outcome outcome);

struct MacroDecision {
    std::optional<int> next_cluster;
    GridCell waypoint;
    bool request_knowledge = false;

    friend bool operator==(const MacroDecision&, const MacroDecision&) = default;
};

struct ClusterState {
    int id = 0;
    GridCell nominal;
    GridCell truth;
    GridCell believed;

    friend bool operator==(const ClusterState&, const ClusterState&) = default;
};

struct PendingDisruption {
    Disruption disruption;
    bool revealed = false;

    friend bool operator==(const PendingDisruption&, const PendingDisruption&) = default;
};

struct SnrDropBinding {
    int cluster = 0;
    GridCell waypoint;
    double drop_db = 0.0;

    friend bool operator==(const SnrDropBinding&, const SnrDropBinding&) = default;
};

struct FailedAttempt {
    int cluster = 0;
    GridCell waypoint;

    friend auto operator<=>(const FailedAttempt&, const FailedAttempt&) = default;
};

struct EpisodeState {
    GridCell uav;
    long clock = 0;
    long start_offset = 0;
    std::set<int> remaining;
    int remaining_budget = 0;
    Outcome last_outcome = Outcome::Idle;
    std::optional<SerializedPack> cached_pack;
    std::vector<ClusterState> clusters;
    std::vector<PendingDisruption> pending;
    std::vector<SnrDropBinding> snr_bindings;
    std::set<FailedAttempt> failed;

    const ClusterState& cluster(int id) const;
    ClusterState& cluster(int id);
    long absolute_clock() const { return clock + start_offset; }

    friend bool operator==(const EpisodeState&, const EpisodeState&) = default;
};

EpisodeState initial_state(const World& world, long start_offset, const DisruptionSet& disruptions);

enum class ViolationKind { NfzEntry, ObstacleCollision, FailedService };
std::string to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind = ViolationKind::NfzEntry;
    long clock = 0;
    GridCell cell;
    int cluster = -1;

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct Reveal {
    Disruption disruption;
    long clock = 0;
    GridCell uav;
};

struct TickRecord {
    long clock = 0; ///< clock after the tick
    GridCell cell;
    bool moved = false;
    bool blocked = false;
};

struct ServeAttempt {
    int cluster = 0;
    GridCell waypoint;
    GridCell cluster_cell;
    double rate_bps = 0.0;
    double snr_drop_db = 0.0;
    bool success = false;
};

struct AdvanceResult {
    EpisodeState state;
    Outcome outcome = Outcome::Idle;
    std::vector<Violation> violations;
    std::vector<Reveal> reveals;
    std::vector<TickRecord> ticks;
    std::optional<ServeAttempt> serve;
    bool interrupted = false; ///< a drift reveal invalidated the decision mid-path
};

/// The budget ran out before the path completed; carries the state at that point.
class BudgetExhausted : public std::runtime_error {
public:
    explicit BudgetExhausted(AdvanceResult partial)
        : std::runtime_error("step budget exhausted"), partial_(std::move(partial))
    {
    }
    const AdvanceResult& partial() const { return partial_; }

private:
    AdvanceResult partial_;
};

/// Shortest time-expanded 4-connected path (waiting allowed). Obstacles are always
/// avoided; the NFZ cell is avoided at active clocks only when `known_rule` is set.
/// Throws NoPathError when the goal is unreachable within `horizon` ticks.
Path plan_path(const World& world, GridCell from, GridCell to, long depart_clock, long start_offset,
    const std::optional<NfzSchedule>& known_rule, int horizon);

/// Convenience form: know_nfz selects the world's true schedule; horizon = step budget.
Path plan_path(const World& world, GridCell from, GridCell to, long depart_clock, long start_offset, bool know_nfz);

/// Executes `path` tick by tick, reveals disruptions, attempts the serve at the end
/// of the path and records violations. `channel` supplies the access-link draws.
AdvanceResult advance(const World& world, const EpisodeState& state, const MacroDecision& decision,
    const Path& path, RandomStream& channel);

} // namespace skypack
