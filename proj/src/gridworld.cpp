#include "skypack/gridworld.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <utility>

namespace skypack {

bool nfz_active(const NfzSchedule& schedule, long clock, long start_offset)
{
    if (schedule.period_steps <= 0)
        return false;
    long phase = (clock + start_offset) % schedule.period_steps;
    if (phase < 0)
        phase += schedule.period_steps;
    return phase >= schedule.active_start && phase < schedule.active_start + schedule.active_len;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

MissionConfig default_mission_config()
{
    MissionConfig c;
    c.clusters = {{0, {1, 1}}, {1, {6, 1}}, {2, {1, 6}}, {3, {6, 6}}};
    c.obstacles = {{2, 2}, {5, 2}, {2, 5}};
    c.nfz = NfzSchedule{};
    c.access_link = default_access_link();
    c.backhaul_link = default_backhaul_link();
    return c;
}

namespace {

GridCell cell_from_json(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() != 2)
        throw ConfigError("cell must be a [x, y] array");
    return {j.at(0).get<int>(), j.at(1).get<int>()};
}

nlohmann::json cell_to_json(GridCell c)
{
    return nlohmann::json::array({c.x, c.y});
}

LinkConfig link_from_json(const nlohmann::json& j, LinkConfig link)
{
    link.bandwidth_hz = j.value("bandwidth_hz", link.bandwidth_hz);
    link.tx_power_dbm = j.value("tx_power_dbm", link.tx_power_dbm);
    link.carrier_hz = j.value("carrier_hz", link.carrier_hz);
    link.noise_psd_dbm_hz = j.value("noise_psd_dbm_hz", link.noise_psd_dbm_hz);
    link.nlos_excess_db = j.value("nlos_excess_db", link.nlos_excess_db);
    link.los_a = j.value("los_a", link.los_a);
    link.los_b = j.value("los_b", link.los_b);
    link.shadowing_sigma_db = j.value("shadowing_sigma_db", link.shadowing_sigma_db);
    return link;
}

nlohmann::json link_to_json(const LinkConfig& l)
{
    return {
        {"bandwidth_hz", l.bandwidth_hz},
        {"tx_power_dbm", l.tx_power_dbm},
        {"carrier_hz", l.carrier_hz},
        {"noise_psd_dbm_hz", l.noise_psd_dbm_hz},
        {"nlos_excess_db", l.nlos_excess_db},
        {"los_a", l.los_a},
        {"los_b", l.los_b},
        {"shadowing_sigma_db", l.shadowing_sigma_db},
    };
}

} // namespace

MissionConfig mission_config_from_json(const nlohmann::json& doc)
{
    MissionConfig c = default_mission_config();
    try {
        if (doc.contains("grid")) {
            const auto& g = doc.at("grid");
            c.width = g.value("width", c.width);
            c.height = g.value("height", c.height);
            c.cell_size_m = g.value("cell_size_m", c.cell_size_m);
            c.altitude_m = g.value("altitude_m", c.altitude_m);
        }
        if (doc.contains("home"))
            c.home = cell_from_json(doc.at("home"));
        if (doc.contains("clusters")) {
            c.clusters.clear();
            for (const auto& cl : doc.at("clusters"))
                c.clusters.push_back({cl.at("id").get<int>(), cell_from_json(cl.at("cell"))});
        }
        if (doc.contains("obstacles")) {
            c.obstacles.clear();
            for (const auto& o : doc.at("obstacles"))
                c.obstacles.push_back(cell_from_json(o));
        }
        if (doc.contains("nfz")) {
            if (doc.at("nfz").is_null()) {
                c.nfz.reset();
            } else {
                const auto& n = doc.at("nfz");
                NfzSchedule s;
                s.cell = cell_from_json(n.at("cell"));
                s.period_steps = n.value("period_steps", s.period_steps);
                s.active_start = n.value("active_start", s.active_start);
                s.active_len = n.value("active_len", s.active_len);
                c.nfz = s;
            }
        }
        if (doc.contains("access_link"))
            c.access_link = link_from_json(doc.at("access_link"), c.access_link);
        if (doc.contains("backhaul_link"))
            c.backhaul_link = link_from_json(doc.at("backhaul_link"), c.backhaul_link);
        c.access_threshold_bps = doc.value("access_threshold_bps", c.access_threshold_bps);
        c.backhaul_threshold_bps = doc.value("backhaul_threshold_bps", c.backhaul_threshold_bps);
        c.step_budget = doc.value("step_budget", c.step_budget);
        if (doc.contains("disruptions")) {
            const auto& d = doc.at("disruptions");
            c.disruptions.p_drift = d.value("p_drift", c.disruptions.p_drift);
            c.disruptions.p_snr = d.value("p_snr", c.disruptions.p_snr);
            if (d.contains("snr_drop_levels_db"))
                c.disruptions.snr_drop_levels_db = d.at("snr_drop_levels_db").get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mission config: ") + e.what());
    }
    return c;
}

nlohmann::json to_json(const MissionConfig& c)
{
    nlohmann::json doc;
    doc["grid"] = {{"width", c.width}, {"height", c.height}, {"cell_size_m", c.cell_size_m}, {"altitude_m", c.altitude_m}};
    doc["home"] = cell_to_json(c.home);
    doc["clusters"] = nlohmann::json::array();
    for (const auto& cl : c.clusters)
        doc["clusters"].push_back({{"id", cl.id}, {"cell", cell_to_json(cl.cell)}});
    doc["obstacles"] = nlohmann::json::array();
    for (const auto& o : c.obstacles)
        doc["obstacles"].push_back(cell_to_json(o));
    if (c.nfz) {
        doc["nfz"] = {{"cell", cell_to_json(c.nfz->cell)}, {"period_steps", c.nfz->period_steps},
            {"active_start", c.nfz->active_start}, {"active_len", c.nfz->active_len}};
    } else {
        doc["nfz"] = nullptr;
    }
    doc["access_link"] = link_to_json(c.access_link);
    doc["backhaul_link"] = link_to_json(c.backhaul_link);
    doc["access_threshold_bps"] = c.access_threshold_bps;
    doc["backhaul_threshold_bps"] = c.backhaul_threshold_bps;
    doc["step_budget"] = c.step_budget;
    doc["disruptions"] = {{"p_drift", c.disruptions.p_drift}, {"p_snr", c.disruptions.p_snr},
        {"snr_drop_levels_db", c.disruptions.snr_drop_levels_db}};
    return doc;
}

MissionConfig load_mission_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return mission_config_from_json(doc);
}

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

bool World::is_obstacle(GridCell c) const
{
    return std::find(obstacles.begin(), obstacles.end(), c) != obstacles.end();
}

const ClusterSpec& World::cluster(int id) const
{
    for (const auto& c : clusters)
        if (c.id == id)
            return c;
    throw std::out_of_range("unknown cluster id " + std::to_string(id));
}

World build_world(const MissionConfig& config)
{
    if (config.width < 2 || config.height < 2)
        throw ConfigError("grid must be at least 2x2");
    if (config.clusters.empty())
        throw ConfigError("at least one cluster is required");
    if (!(config.access_threshold_bps > 0.0) || !(config.backhaul_threshold_bps > 0.0))
        throw ConfigError("link thresholds must be positive");
    if (config.step_budget <= 0)
        throw ConfigError("step budget must be positive");
    if (!(config.cell_size_m > 0.0) || !(config.altitude_m > 0.0))
        throw ConfigError("cell size and altitude must be positive");
    try {
        validate(config.access_link);
        validate(config.backhaul_link);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto& dc = config.disruptions;
    if (dc.p_drift < 0.0 || dc.p_drift > 1.0 || dc.p_snr < 0.0 || dc.p_snr > 1.0)
        throw ConfigError("disruption probabilities must lie in [0, 1]");
    if (dc.p_snr > 0.0 && dc.snr_drop_levels_db.empty())
        throw ConfigError("snr drop levels must be non-empty");
    for (double level : dc.snr_drop_levels_db)
        if (!(level > 0.0))
            throw ConfigError("snr drop levels must be positive");

    auto in_grid = [&](GridCell c) { return c.x >= 0 && c.y >= 0 && c.x < config.width && c.y < config.height; };
    std::map<GridCell, std::string> taken;
    auto claim = [&](GridCell c, const std::string& what) {
        if (!in_grid(c))
            throw OutOfGridError(what + " at " + to_string(c) + " is outside the grid");
        auto [it, inserted] = taken.emplace(c, what);
        if (!inserted)
            throw OverlapError(what + " overlaps " + it->second + " at " + to_string(c));
    };
    claim(config.home, "home");
    std::set<int> ids;
    for (const auto& cl : config.clusters) {
        if (!ids.insert(cl.id).second)
            throw ConfigError("duplicate cluster id " + std::to_string(cl.id));
        claim(cl.cell, "cluster " + std::to_string(cl.id));
    }
    for (const auto& o : config.obstacles)
        claim(o, "obstacle");
    if (config.nfz) {
        const auto& n = *config.nfz;
        claim(n.cell, "nfz");
        if (n.period_steps <= 0 || n.active_start < 0 || n.active_start >= n.period_steps || n.active_len <= 0
            || n.active_start + n.active_len > n.period_steps)
            throw ConfigError("nfz window must lie inside one period");
    }

    World w;
    w.width = config.width;
    w.height = config.height;
    w.cell_size_m = config.cell_size_m;
    w.altitude_m = config.altitude_m;
    w.home = config.home;
    w.clusters = config.clusters;
    std::sort(w.clusters.begin(), w.clusters.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    w.obstacles = config.obstacles;
    std::sort(w.obstacles.begin(), w.obstacles.end(), row_major_less);
    w.nfz = config.nfz;
    w.access_link = config.access_link;
    w.backhaul_link = config.backhaul_link;
    w.access_threshold_bps = config.access_threshold_bps;
    w.backhaul_threshold_bps = config.backhaul_threshold_bps;
    w.step_budget = config.step_budget;
    w.disruptions = config.disruptions;
    return w;
}

// ---------------------------------------------------------------------------
// Disruptions
// ---------------------------------------------------------------------------

std::string to_string(DisruptionKind kind)
{
    return kind == DisruptionKind::ClusterDrift ? "cluster_drift" : "snr_drop";
}

nlohmann::json to_json(const DisruptionSet& set)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : set.items) {
        nlohmann::json j{{"kind", to_string(d.kind)}, {"cluster", d.cluster}};
        if (d.kind == DisruptionKind::ClusterDrift)
            j["offset"] = cell_to_json(d.offset);
        else
            j["snr_drop_db"] = d.snr_drop_db;
        arr.push_back(std::move(j));
    }
    return {{"disruptions", arr}};
}

DisruptionSet disruption_set_from_json(const nlohmann::json& doc)
{
    DisruptionSet set;
    try {
        for (const auto& j : doc.at("disruptions")) {
            Disruption d;
            const auto kind = j.at("kind").get<std::string>();
            d.cluster = j.at("cluster").get<int>();
            if (kind == "cluster_drift") {
                d.kind = DisruptionKind::ClusterDrift;
                d.offset = cell_from_json(j.at("offset"));
            } else if (kind == "snr_drop") {
                d.kind = DisruptionKind::SnrDrop;
                d.snr_drop_db = j.at("snr_drop_db").get<double>();
            } else {
                throw ConfigError("unknown disruption kind " + kind);
            }
            set.items.push_back(d);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("disruption set: ") + e.what());
    }
    return set;
}

bool drift_target_legal(const World& world, int cluster_id, GridCell target)
{
    if (!world.in_grid(target) || world.is_obstacle(target) || world.is_nfz_cell(target) || target == world.home)
        return false;
    for (const auto& c : world.clusters)
        if (c.id != cluster_id && c.cell == target)
            return false;
    return true;
}

DisruptionSet sample_disruptions(std::uint64_t seed, const DisruptionConfig& config, const World& world)
{
    static constexpr std::array<GridCell, 4> kOffsets{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    RandomStream rng = RandomStream::derive(seed, "disruptions");
    DisruptionSet set;
    for (const auto& cluster : world.clusters) {
        // Four draws per cluster regardless of outcome keep the stream aligned.
        const double u_drift = rng.uniform();
        const std::uint64_t drift_pick = rng.next_u64();
        const double u_snr = rng.uniform();
        const std::uint64_t level_pick = rng.next_u64();

        if (u_drift < config.p_drift) {
            std::vector<GridCell> legal;
            for (const auto& off : kOffsets)
                if (drift_target_legal(world, cluster.id, {cluster.cell.x + off.x, cluster.cell.y + off.y}))
                    legal.push_back(off);
            if (!legal.empty())
                set.items.push_back({DisruptionKind::ClusterDrift, cluster.id, legal[drift_pick % legal.size()], 0.0});
        }
        if (u_snr < config.p_snr && !config.snr_drop_levels_db.empty()) {
            const double level = config.snr_drop_levels_db[level_pick % config.snr_drop_levels_db.size()];
            set.items.push_back({DisruptionKind::SnrDrop, cluster.id, {}, level});
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Episode state
// ---------------------------------------------------------------------------

std::string to_string(Outcome outcome)
{
    switch (outcome) {
    case Outcome::Moved: return "moved";
    case Outcome::Blocked: return "blocked";
    case Outcome::Served: return "served";
    case Outcome::ServeFailed: return "serve_failed";
    case Outcome::Idle: return "idle";
    }
    return "idle";
}

std::string to_string(ViolationKind kind)
{
    switch (kind) {
    case ViolationKind::NfzEntry: return "nfz_entry";
    case ViolationKind::ObstacleCollision: return "obstacle_collision";
    case ViolationKind::FailedService: return "failed_service";
    }
    return "nfz_entry";
}

const ClusterState& EpisodeState::cluster(int id) const
{
    for (const auto& c : clusters)
        if (c.id == id)
            return c;
    throw std::out_of_range("unknown cluster id " + std::to_string(id));
}

ClusterState& EpisodeState::cluster(int id)
{
    return const_cast<ClusterState&>(std::as_const(*this).cluster(id));
}

EpisodeState initial_state(const World& world, long start_offset, const DisruptionSet& disruptions)
{
    EpisodeState s;
    s.uav = world.home;
    s.start_offset = start_offset;
    s.remaining_budget = world.step_budget;
    for (const auto& c : world.clusters) {
        s.remaining.insert(c.id);
        s.clusters.push_back({c.id, c.cell, c.cell, c.cell});
    }
    for (const auto& d : disruptions.items)
        s.pending.push_back({d, false});
    return s;
}

// ---------------------------------------------------------------------------
// Path planning
// ---------------------------------------------------------------------------

Path plan_path(const World& world, GridCell from, GridCell to, long depart_clock, long start_offset,
    const std::optional<NfzSchedule>& known_rule, int horizon)
{
    if (!world.in_grid(from) || !world.in_grid(to))
        throw NoPathError("path endpoint outside the grid");
    if (world.is_obstacle(to))
        throw NoPathError("destination " + to_string(to) + " is an obstacle");
    if (from == to)
        return {};

    const int w = world.width;
    const int cells = world.width * world.height;
    auto index = [w](GridCell c) { return c.y * w + c.x; };
    auto blocked_at = [&](GridCell c, long clock) {
        if (world.is_obstacle(c))
            return true;
        return known_rule && known_rule->cell == c && nfz_active(*known_rule, clock, start_offset);
    };

    // Candidate moves in row-major order of the destination cell; waiting sorts in the middle.
    static constexpr std::array<GridCell, 5> kMoves{{{0, -1}, {-1, 0}, {0, 0}, {1, 0}, {0, 1}}};

    // parent[t][cell] = index of the predecessor at layer t-1, -1 when unreached.
    std::vector<std::vector<int>> parent;
    std::vector<int> frontier{index(from)};
    std::vector<char> seen(cells, 0);
    for (int t = 1; t <= horizon; ++t) {
        std::vector<int> layer(cells, -1);
        std::vector<int> next;
        std::fill(seen.begin(), seen.end(), 0);
        for (int cur : frontier) {
            const GridCell c{cur % w, cur / w};
            for (const auto& m : kMoves) {
                const GridCell n{c.x + m.x, c.y + m.y};
                if (!world.in_grid(n) || blocked_at(n, depart_clock + t))
                    continue;
                const int ni = index(n);
                if (seen[ni])
                    continue;
                seen[ni] = 1;
                layer[ni] = cur;
                next.push_back(ni);
            }
        }
        parent.push_back(std::move(layer));
        if (seen[index(to)]) {
            Path path(t);
            int cur = index(to);
            for (int k = t; k >= 1; --k) {
                path[k - 1] = {cur % w, cur / w};
                cur = parent[k - 1][cur];
            }
            return path;
        }
        if (next.empty())
            break;
        frontier = std::move(next);
    }
    throw NoPathError("no legal path from " + to_string(from) + " to " + to_string(to) + " within "
        + std::to_string(horizon) + " steps");
}

Path plan_path(const World& world, GridCell from, GridCell to, long depart_clock, long start_offset, bool know_nfz)
{
    return plan_path(world, from, to, depart_clock, start_offset,
        know_nfz ? world.nfz : std::optional<NfzSchedule>{}, world.step_budget);
}

// ---------------------------------------------------------------------------
// Motion
// ---------------------------------------------------------------------------

AdvanceResult advance(const World& world, const EpisodeState& state, const MacroDecision& decision,
    const Path& path, RandomStream& channel)
{
    AdvanceResult r;
    r.state = state;
    EpisodeState& s = r.state;

    auto check_nfz = [&]() {
        if (world.nfz && s.uav == world.nfz->cell && nfz_active(*world.nfz, s.clock, s.start_offset))
            r.violations.push_back({ViolationKind::NfzEntry, s.clock, s.uav, -1});
    };

    for (const GridCell& next : path) {
        if (s.remaining_budget <= 0)
            throw BudgetExhausted(r);
        ++s.clock;
        --s.remaining_budget;

        if (!world.in_grid(next) || world.is_obstacle(next) || manhattan(next, s.uav) > 1) {
            r.ticks.push_back({s.clock, s.uav, false, true});
            if (world.is_obstacle(next) && next == decision.waypoint)
                r.violations.push_back({ViolationKind::ObstacleCollision, s.clock, next,
                    decision.next_cluster.value_or(-1)});
            check_nfz();
            r.outcome = Outcome::Blocked;
            s.last_outcome = r.outcome;
            return r;
        }

        const bool moved = next != s.uav;
        s.uav = next;
        r.ticks.push_back({s.clock, s.uav, moved, false});
        check_nfz();

        for (auto& p : s.pending) {
            if (p.revealed || p.disruption.kind != DisruptionKind::ClusterDrift)
                continue;
            if (!s.remaining.contains(p.disruption.cluster))
                continue;
            auto& cl = s.cluster(p.disruption.cluster);
            if (chebyshev(s.uav, cl.believed) > 1)
                continue;
            p.revealed = true;
            cl.truth = {cl.nominal.x + p.disruption.offset.x, cl.nominal.y + p.disruption.offset.y};
            cl.believed = cl.truth;
            r.reveals.push_back({p.disruption, s.clock, s.uav});
            r.interrupted = true;
        }
        if (r.interrupted) {
            r.outcome = Outcome::Moved;
            s.last_outcome = r.outcome;
            return r;
        }
    }

    const bool serving = decision.next_cluster && s.remaining.contains(*decision.next_cluster)
        && s.uav == decision.waypoint;
    if (!serving) {
        r.outcome = path.empty() ? Outcome::Idle : Outcome::Moved;
        s.last_outcome = r.outcome;
        return r;
    }

    const int id = *decision.next_cluster;
    for (auto& p : s.pending) {
        if (p.revealed || p.disruption.kind != DisruptionKind::SnrDrop || p.disruption.cluster != id)
            continue;
        p.revealed = true;
        s.snr_bindings.push_back({id, s.uav, p.disruption.snr_drop_db});
        r.reveals.push_back({p.disruption, s.clock, s.uav});
    }
    double drop = 0.0;
    for (const auto& b : s.snr_bindings)
        if (b.cluster == id && b.waypoint == s.uav)
            drop += b.drop_db;

    const GridCell ground = s.cluster(id).truth;
    ServeAttempt attempt{id, s.uav, ground, 0.0, drop, false};
    attempt.rate_bps = sample_rate_bps(world.access_link, geometry(world, s.uav, ground), channel, drop);
    attempt.success = link_feasible(attempt.rate_bps, world.access_threshold_bps);
    r.serve = attempt;
    if (attempt.success) {
        s.remaining.erase(id);
        r.outcome = Outcome::Served;
    } else {
        r.violations.push_back({ViolationKind::FailedService, s.clock, s.uav, id});
        r.outcome = Outcome::ServeFailed;
    }
    s.last_outcome = r.outcome;
    return r;
}

} // namespace skypack
