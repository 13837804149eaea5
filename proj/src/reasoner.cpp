#include "skypack/reasoner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <sstream>

namespace skypack {

std::string to_string(StepKind kind)
{
    switch (kind) {
    case StepKind::Hypothesis: return "hypothesis";
    case StepKind::Check: return "check";
    case StepKind::Reconcile: return "reconcile";
    case StepKind::Retrieve: return "retrieve";
    case StepKind::Commit: return "commit";
    }
    return "commit";
}

long CostModel::cost(StepKind kind) const
{
    switch (kind) {
    case StepKind::Hypothesis: return hypothesis;
    case StepKind::Check: return check;
    case StepKind::Reconcile: return reconcile;
    case StepKind::Retrieve: return retrieve;
    case StepKind::Commit: return commit;
    }
    return commit;
}

long CostModel::min_cost() const
{
    return std::min({hypothesis, check, retrieve, reconcile, commit});
}

long ReasoningTrace::token_count() const
{
    long total = 0;
    for (const auto& s : steps)
        total += s.tokens;
    return total;
}

long ReasoningTrace::count(StepKind kind) const
{
    return std::count_if(steps.begin(), steps.end(), [kind](const ReasoningStep& s) { return s.kind == kind; });
}

std::set<int> Observation::remaining_ids() const
{
    std::set<int> ids;
    for (const auto& c : remaining)
        ids.insert(c.id);
    return ids;
}

const BelievedCluster* Observation::find(int id) const
{
    for (const auto& c : remaining)
        if (c.id == id)
            return &c;
    return nullptr;
}

Observation observe(const World& world, const EpisodeState& state, bool backhaul_feasible)
{
    Observation obs;
    obs.uav = state.uav;
    obs.home = world.home;
    for (int id : state.remaining)
        obs.remaining.push_back({id, state.cluster(id).believed});
    obs.remaining_budget = state.remaining_budget;
    obs.clock = state.clock;
    obs.start_offset = state.start_offset;
    obs.last_outcome = state.last_outcome;
    obs.backhaul_feasible = backhaul_feasible;
    obs.pack_cached = state.cached_pack.has_value();
    obs.failed = state.failed;
    return obs;
}

namespace {

Decision mission_end(const Observation& obs, const CostModel& cost)
{
    Decision d;
    d.decision = {std::nullopt, obs.home, false};
    d.trace.add(StepKind::Commit, cost);
    return d;
}

GridCell shift(GridCell c, GridCell by)
{
    return {c.x + by.x, c.y + by.y};
}

GridCell delta(GridCell to, GridCell from)
{
    return {to.x - from.x, to.y - from.y};
}

struct Candidate {
    int cluster = 0;
    GridCell waypoint;     ///< translated to the believed cluster position
    GridCell row_waypoint; ///< as stored in the pack
    long rate_kbps = 0;
    bool feasible = false;
};

int octave_margin(long rate_kbps, long threshold_bps)
{
    if (rate_kbps <= 0 || threshold_bps <= 0)
        return std::numeric_limits<int>::min();
    return static_cast<int>(std::floor(std::log2(rate_kbps * 1000.0 / threshold_bps)));
}

} // namespace

// ---------------------------------------------------------------------------
// Procedural (knowledge-driven)
// ---------------------------------------------------------------------------

Decision procedural_decide(const Observation& obs, const ActiveKnowledge& active, const CostModel& cost,
    const ProceduralOptions& options)
{
    if (obs.remaining.empty())
        return mission_end(obs, cost);

    const Workflow workflow = active.workflow ? *active.workflow : canonical_workflow(0.0, 0.0);
    long access_threshold = 0;
    for (const auto& c : workflow.checks)
        if (c.kind == CheckKind::AccessCheck)
            access_threshold = c.threshold_bps;

    std::vector<Candidate> candidates;
    for (const auto& row : active.access) {
        const BelievedCluster* b = obs.find(row.cluster);
        if (!b)
            continue;
        candidates.push_back({row.cluster, shift(row.waypoint, delta(b->cell, row.cluster_cell)), row.waypoint,
            row.rate_kbps, row.feasible});
    }
    std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
        const int ma = octave_margin(a.rate_kbps, access_threshold);
        const int mb = octave_margin(b.rate_kbps, access_threshold);
        if (ma != mb)
            return ma > mb;
        const int da = manhattan(obs.uav, a.waypoint);
        const int db = manhattan(obs.uav, b.waypoint);
        if (da != db)
            return da < db;
        if (a.cluster != b.cluster)
            return a.cluster < b.cluster;
        return row_major_less(a.waypoint, b.waypoint);
    });

    ReasoningTrace trace;
    if (!active.plan_suffixes.empty()) {
        const ReferencePlan& suffix = active.plan_suffixes.front();
        const int id = suffix.order.front();
        const GridCell wp = suffix.waypoints.front();
        auto it = std::find_if(candidates.begin(), candidates.end(),
            [&](const Candidate& c) { return c.cluster == id && c.row_waypoint == wp; });
        if (it != candidates.end()) {
            std::rotate(candidates.begin(), it, it + 1);
            trace.add(StepKind::Retrieve, cost);
        }
    }

    const std::set<int> remaining = obs.remaining_ids();
    const bool considering_request = !obs.pack_cached;
    for (Candidate cand : candidates) {
        for (const auto& conflict : active.conflicts) {
            if (conflict.entry.cluster != cand.cluster)
                continue;
            trace.add(StepKind::Reconcile, cost);
            if (options.conflicts_flip_ranking && conflict.entry.waypoint == cand.row_waypoint)
                cand.feasible = conflict.entry.feasible;
        }
        bool ok = true;
        for (const auto& check : workflow.checks) {
            switch (check.kind) {
            case CheckKind::AccessCheck:
                trace.add(StepKind::Check, cost);
                ok = cand.feasible && !obs.failed.contains({cand.cluster, cand.waypoint});
                break;
            case CheckKind::BackhaulCheck:
                // Only gates a knowledge request; never rejects the candidate.
                if (considering_request)
                    trace.add(StepKind::Check, cost);
                break;
            case CheckKind::LegalityCheck: {
                trace.add(StepKind::Check, cost);
                const GridCell w = cand.waypoint;
                const bool in_grid = w.x >= 0 && w.y >= 0 && w.x < active.width && w.y < active.height;
                const bool obstacle = std::find(active.obstacles.begin(), active.obstacles.end(), w) != active.obstacles.end();
                const bool nfz = active.nfz_rule.active_len > 0 && active.nfz_rule.cell == w;
                ok = in_grid && !obstacle && !nfz && remaining.contains(cand.cluster)
                    && manhattan(obs.uav, w) <= obs.remaining_budget;
                break;
            }
            case CheckKind::CommitOrReject:
                if (ok) {
                    trace.add(StepKind::Commit, cost);
                    return {{cand.cluster, cand.waypoint, considering_request && obs.backhaul_feasible}, trace};
                }
                break;
            }
            if (!ok)
                break;
        }
    }
    throw NoFeasibleDecision(trace);
}

// ---------------------------------------------------------------------------
// Search (knowledge-free)
// ---------------------------------------------------------------------------

PublicWorldView public_view(const World& world)
{
    PublicWorldView v;
    v.width = world.width;
    v.height = world.height;
    v.home = world.home;
    return v;
}

PublicWorldView public_view(const World& world, const ActiveKnowledge& active)
{
    PublicWorldView v = public_view(world);
    v.known_obstacles = active.obstacles;
    if (active.nfz_rule.active_len > 0)
        v.nfz_rule = active.nfz_rule;
    return v;
}

Decision search_decide(const Observation& obs, const PublicWorldView& view, const CostModel& cost, RandomStream& rng)
{
    if (obs.remaining.empty())
        return mission_end(obs, cost);

    struct Hypothesis {
        int cluster;
        GridCell waypoint;
    };
    std::vector<Hypothesis> hyps;
    for (const auto& b : obs.remaining) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const GridCell c{b.cell.x + dx, b.cell.y + dy};
                if (c.x < 0 || c.y < 0 || c.x >= view.width || c.y >= view.height)
                    continue;
                if (std::find(view.known_obstacles.begin(), view.known_obstacles.end(), c) != view.known_obstacles.end())
                    continue;
                if (view.nfz_rule && view.nfz_rule->cell == c)
                    continue;
                hyps.push_back({b.id, c});
            }
        }
    }
    for (std::size_t i = hyps.size(); i > 1; --i)
        std::swap(hyps[i - 1], hyps[rng.below(i)]);
    std::stable_sort(hyps.begin(), hyps.end(), [&](const Hypothesis& a, const Hypothesis& b) {
        return manhattan(obs.uav, a.waypoint) < manhattan(obs.uav, b.waypoint);
    });

    Decision d;
    for (const auto& h : hyps) {
        d.trace.add(StepKind::Hypothesis, cost);
        d.trace.add(StepKind::Check, cost);
        if (obs.failed.contains({h.cluster, h.waypoint}) || manhattan(obs.uav, h.waypoint) > obs.remaining_budget)
            continue;
        d.trace.add(StepKind::Commit, cost);
        d.decision = {h.cluster, h.waypoint, false};
        return d;
    }
    // Every hypothesis failed its check: commit to the first remaining cluster anyway.
    d.trace.add(StepKind::Commit, cost);
    d.decision = {obs.remaining.front().id, obs.remaining.front().cell, false};
    return d;
}

Decision greedy_decide(const Observation& obs, const CostModel& cost)
{
    if (obs.remaining.empty())
        return mission_end(obs, cost);
    const BelievedCluster* best = &obs.remaining.front();
    for (const auto& c : obs.remaining) {
        const int dc = manhattan(obs.uav, c.cell);
        const int db = manhattan(obs.uav, best->cell);
        if (dc < db || (dc == db && c.id < best->id))
            best = &c;
    }
    GridCell wp = best->cell;
    if (obs.failed.contains({best->id, wp})) {
        for (const GridCell off : {GridCell{0, -1}, GridCell{-1, 0}, GridCell{1, 0}, GridCell{0, 1}}) {
            const GridCell c = shift(best->cell, off);
            if (c.x >= 0 && c.y >= 0 && !obs.failed.contains({best->id, c})) {
                wp = c;
                break;
            }
        }
    }
    Decision d;
    d.decision = {best->id, wp, false};
    d.trace.add(StepKind::Commit, cost);
    return d;
}

// ---------------------------------------------------------------------------
// Home planning
// ---------------------------------------------------------------------------

std::string serialize_plan(const MissionPlan& plan)
{
    std::ostringstream os;
    os << "plan created=" << plan.created_clock << " legs=" << plan.legs.size() << "\n";
    for (const auto& leg : plan.legs) {
        os << "leg cluster=" << leg.cluster << " from=" << to_string(leg.from) << " hover=" << to_string(leg.waypoint)
           << " depart=" << leg.depart_clock << " arrive=" << leg.depart_clock + static_cast<long>(leg.path.size())
           << "\n";
        os << "path";
        for (std::size_t i = 0; i < leg.path.size(); ++i)
            os << " " << to_string(leg.path[i]) << "@" << leg.depart_clock + static_cast<long>(i) + 1;
        os << "\n";
        os << "serve cluster=" << leg.cluster << " at=" << to_string(leg.waypoint) << " verify=access\n";
    }
    os << "checkpoints";
    for (long c : plan.backhaul_checkpoints)
        os << " " << c;
    os << "\nend\n";
    return os.str();
}

MissionPlan home_plan(const World& world, const SerializedPack& pack, const Observation& obs, const CostModel& cost)
{
    MissionPlan plan;
    plan.created_clock = obs.clock;
    Observation sim = obs;
    sim.pack_cached = true;
    std::optional<BackhaulMap> map;
    std::optional<NfzSchedule> rule;
    {
        const auto parsed = parse_pack(pack.body);
        map = parsed.pack.backhaul_map;
        if (parsed.pack.nfz_rule.active_len > 0)
            rule = parsed.pack.nfz_rule;
    }
    while (!sim.remaining.empty()) {
        const ActiveKnowledge active = activate(pack, {sim.uav, sim.remaining_ids(), sim.clock});
        Decision d;
        try {
            d = procedural_decide(sim, active, cost);
        } catch (const NoFeasibleDecision&) {
            throw PlannerError("home planner found no feasible leg");
        }
        if (!d.decision.next_cluster)
            break;
        PlanLeg leg;
        leg.cluster = *d.decision.next_cluster;
        leg.from = sim.uav;
        leg.waypoint = d.decision.waypoint;
        leg.depart_clock = sim.clock;
        try {
            leg.path = plan_path(world, sim.uav, leg.waypoint, sim.clock, sim.start_offset, rule, sim.remaining_budget);
        } catch (const NoPathError& e) {
            throw PlannerError(e.what());
        }
        if (leg.path.empty())
            leg.path = {sim.uav};
        for (std::size_t i = 0; i < leg.path.size(); ++i) {
            const GridCell c = leg.path[i];
            if (map && map->probability(c) >= 0.8)
                plan.backhaul_checkpoints.push_back(leg.depart_clock + static_cast<long>(i) + 1);
        }
        sim.uav = leg.waypoint;
        sim.clock += static_cast<long>(leg.path.size());
        sim.remaining_budget -= static_cast<int>(leg.path.size());
        std::erase_if(sim.remaining, [&](const BelievedCluster& c) { return c.id == leg.cluster; });
        plan.legs.push_back(std::move(leg));
    }
    return plan;
}

CloudStep cloud_follow(const MissionPlan& plan, const Observation& obs, const CostModel& cost)
{
    CloudStep step;
    step.trace.add(StepKind::Commit, cost);
    for (const auto& leg : plan.legs) {
        if (!obs.find(leg.cluster))
            continue;
        step.decision = {leg.cluster, leg.waypoint, false};
        if (leg.from == obs.uav && leg.depart_clock == obs.clock)
            step.stored_path = leg.path;
        return step;
    }
    if (!obs.remaining.empty()) {
        // The plan no longer covers a remaining cluster: head for its believed cell.
        step.decision = {obs.remaining.front().id, obs.remaining.front().cell, false};
        return step;
    }
    step.decision = {std::nullopt, obs.home, false};
    return step;
}

// ---------------------------------------------------------------------------
// Prompt and response text
// ---------------------------------------------------------------------------

std::string build_prompt(const Observation& obs, const std::optional<SerializedPack>& pack)
{
    std::ostringstream os;
    os << "### system\n"
          "You are the onboard macro planner of a UAV serving ground clusters on a grid.\n"
          "Choose the next cluster to serve, the hover waypoint, and whether to request the Home knowledge pack.\n"
          "A serve succeeds only if the access rate exceeds the threshold. Avoid obstacles and the active no-fly cell.\n"
          "Write each reasoning step on its own line starting with \"STEP:\".\n"
          "Finish with exactly one line:\n"
          "DECISION: cluster=<id|none> waypoint=(x,y) request_knowledge=<true|false>\n";
    if (pack) {
        os << "### knowledge\n" << pack->body;
        if (!pack->body.empty() && pack->body.back() != '\n')
            os << "\n";
    }
    os << "### observation\n";
    os << "uav=" << to_string(obs.uav) << " home=" << to_string(obs.home) << " clock=" << obs.clock
       << " mission_clock=" << obs.absolute_clock() << " budget=" << obs.remaining_budget << "\n";
    os << "last_outcome=" << to_string(obs.last_outcome) << " backhaul=" << (obs.backhaul_feasible ? "up" : "down")
       << " pack_cached=" << (obs.pack_cached ? "true" : "false") << "\n";
    for (const auto& c : obs.remaining)
        os << "cluster " << c.id << " believed=" << to_string(c.cell) << "\n";
    for (const auto& f : obs.failed)
        os << "failed cluster=" << f.cluster << " waypoint=" << to_string(f.waypoint) << "\n";
    os << "### answer\n";
    return os.str();
}

Decision parse_llm_response(const std::string& text, int width, int height)
{
    static const std::regex kDecision(
        R"(^DECISION:\s*cluster=(none|-?\d+)\s+waypoint=\((-?\d+),\s*(-?\d+)\)\s+request_knowledge=(true|false)\s*$)");
    Decision d;
    std::optional<std::string> decision_line;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const auto start = line.find_first_not_of(" \t");
        if (start == std::string::npos)
            continue;
        const std::string body = line.substr(start);
        if (body.rfind("STEP:", 0) == 0) {
            std::string lower = body;
            std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
            StepKind kind = StepKind::Hypothesis;
            if (lower.find("reconcil") != std::string::npos)
                kind = StepKind::Reconcile;
            else if (lower.find("retriev") != std::string::npos)
                kind = StepKind::Retrieve;
            else if (lower.find("check") != std::string::npos || lower.find("verify") != std::string::npos)
                kind = StepKind::Check;
            d.trace.steps.push_back({kind, count_tokens(body)});
        } else if (body.rfind("DECISION:", 0) == 0) {
            if (decision_line)
                throw ParseError("more than one DECISION line");
            decision_line = body;
        }
    }
    if (!decision_line)
        throw ParseError("missing DECISION line");
    std::smatch m;
    if (!std::regex_match(*decision_line, m, kDecision))
        throw ParseError("malformed DECISION line: " + *decision_line);
    const GridCell wp{std::stoi(m[2].str()), std::stoi(m[3].str())};
    if (wp.x < 0 || wp.y < 0 || wp.x >= width || wp.y >= height)
        throw ParseError("decision waypoint " + to_string(wp) + " is outside the grid");
    if (m[1].str() != "none")
        d.decision.next_cluster = std::stoi(m[1].str());
    d.decision.waypoint = wp;
    d.decision.request_knowledge = m[4].str() == "true";
    d.trace.steps.push_back({StepKind::Commit, count_tokens(*decision_line)});
    return d;
}

} // namespace skypack
