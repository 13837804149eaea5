#pragma once

#include "skypack/gridworld.hpp"
#include "skypack/knowledge.hpp"
#include "skypack/rng.hpp"

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace skypack {

enum class StepKind { Hypothesis, Check, Reconcile, Retrieve, Commit };
std::string to_string(StepKind kind);

/// Tokens charged per reasoning step kind.
struct CostModel {
    long hypothesis = 24;
    long check = 16;
    long retrieve = 20;
    long reconcile = 28;
    long commit = 12;

    long cost(StepKind kind) const;
    long min_cost() const;
    friend bool operator==(const CostModel&, const CostModel&) = default;
};

struct ReasoningStep {
    StepKind kind = StepKind::Commit;
    long tokens = 0;

    friend bool operator==(const ReasoningStep&, const ReasoningStep&) = default;
};

/// Macro reasoning only; motion ticks never appear here.
struct ReasoningTrace {
    std::vector<ReasoningStep> steps;

    void add(StepKind kind, const CostModel& cost) { steps.push_back({kind, cost.cost(kind)}); }
    long step_count() const { return static_cast<long>(steps.size()); }
    long token_count() const;
    long count(StepKind kind) const;
    void append(const ReasoningTrace& other) { steps.insert(steps.end(), other.steps.begin(), other.steps.end()); }
    friend bool operator==(const ReasoningTrace&, const ReasoningTrace&) = default;
};

struct BelievedCluster {
    int id = 0;
    GridCell cell;

    friend bool operator==(const BelievedCluster&, const BelievedCluster&) = default;
};

/// Onboard signals at a decision point. No hidden ground truth.
struct Observation {
    GridCell uav;
    GridCell home;
    std::vector<BelievedCluster> remaining;
    int remaining_budget = 0;
    long clock = 0;
    long start_offset = 0;
    Outcome last_outcome = Outcome::Idle;
    bool backhaul_feasible = false;
    bool pack_cached = false;
    std::set<FailedAttempt> failed;

    long absolute_clock() const { return clock + start_offset; }
    std::set<int> remaining_ids() const;
    const BelievedCluster* find(int id) const;
};

Observation observe(const World& world, const EpisodeState& state, bool backhaul_feasible);

struct Decision {
    MacroDecision decision;
    ReasoningTrace trace;
};

class NoFeasibleDecision : public std::runtime_error {
public:
    explicit NoFeasibleDecision(ReasoningTrace partial)
        : std::runtime_error("every candidate was rejected"), partial_(std::move(partial))
    {
    }
    const ReasoningTrace& partial() const { return partial_; }

private:
    ReasoningTrace partial_;
};

struct ProceduralOptions {
    /// Let a conflicting annotation override the lookup's feasible flag.
    bool conflicts_flip_ranking = false;
};

Decision procedural_decide(const Observation& obs, const ActiveKnowledge& active, const CostModel& cost,
    const ProceduralOptions& options = {});

/// Static facts a knowledge-free agent may use. Obstacles and the NFZ rule are
/// present only when supplied by a pack.
struct PublicWorldView {
    int width = 8;
    int height = 8;
    GridCell home;
    std::vector<GridCell> known_obstacles;
    std::optional<NfzSchedule> nfz_rule;
};

PublicWorldView public_view(const World& world);
PublicWorldView public_view(const World& world, const ActiveKnowledge& active);

Decision search_decide(const Observation& obs, const PublicWorldView& view, const CostModel& cost, RandomStream& rng);

/// Nearest unserved cluster, hover over its believed cell, one Commit step.
Decision greedy_decide(const Observation& obs, const CostModel& cost);

// ---------------------------------------------------------------------------
// Home planning and cloud replanning
// ---------------------------------------------------------------------------

class PlannerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PlanLeg {
    int cluster = 0;
    GridCell from;
    GridCell waypoint;
    long depart_clock = 0;
    Path path; ///< timed: path[i] is occupied at depart_clock + i + 1

    friend bool operator==(const PlanLeg&, const PlanLeg&) = default;
};

struct MissionPlan {
    long created_clock = 0;
    std::vector<PlanLeg> legs;
    std::vector<long> backhaul_checkpoints; ///< planned clocks with a strong expected backhaul

    friend bool operator==(const MissionPlan&, const MissionPlan&) = default;
};

/// Downlink text of a plan.
std::string serialize_plan(const MissionPlan& plan);

/// Home-side planner: procedural reasoning with the full pack, then NFZ-safe timed paths.
MissionPlan home_plan(const World& world, const SerializedPack& pack, const Observation& obs, const CostModel& cost);

/// Onboard side of the cloud policy: follows the current plan leg.
struct CloudStep {
    MacroDecision decision;
    ReasoningTrace trace;
    std::optional<Path> stored_path; ///< valid only when the plan leg still departs from here, now
};

CloudStep cloud_follow(const MissionPlan& plan, const Observation& obs, const CostModel& cost);

// ---------------------------------------------------------------------------
// Text interface for an external reasoner
// ---------------------------------------------------------------------------

std::string build_prompt(const Observation& obs, const std::optional<SerializedPack>& pack);

/// Tokens per step are count_tokens of the marked line. `width`/`height` bound the waypoint.
Decision parse_llm_response(const std::string& text, int width, int height);

} // namespace skypack
