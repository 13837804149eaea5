#pragma once

// Knowledge lifecycle: episode traces (information) are promoted at Home into a
// KnowledgePack, rendered at an exposure level K into the wire text that is synced
// over the backhaul, and filtered per decision into ActiveKnowledge.
//
// Exposure levels are cumulative:
//   K=1  NFZ rule + obstacle list
//   K=2  + backhaul feasibility map
//   K=3  + serve-and-verify workflow + access feasibility lookup
//   K=4  + retrieval reference plans
//   K=5  + redundant / conflicting entries and free-text notes
// The text grammar is specified in docs/pack_format.md.

#include "skypack/gridworld.hpp"
#include "skypack/tokens.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace skypack {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InductionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Information: episode traces
// ---------------------------------------------------------------------------

enum class Action { Move, Hover, Serve, Blocked };
std::string to_string(Action action);

struct StepRecord {
    long clock = 0;
    GridCell cell;
    Action action = Action::Hover;
    Outcome outcome = Outcome::Idle;
    std::optional<double> access_bps;   ///< present on serve attempts
    std::optional<double> backhaul_bps;
    std::optional<bool> nfz_active;     ///< present when the NFZ cell is within sensing range
    int cluster = -1;                   ///< served cluster, serve attempts only
    GridCell cluster_cell;
    std::vector<std::string> disruptions;
};

struct EpisodeTrace {
    long episode_id = 0;
    long start_offset = 0;
    std::vector<StepRecord> steps;
    std::string termination;
    std::map<int, double> throughput_bps;
};

/// One step record as written in trace files.
std::string step_json_line(const StepRecord& step);

/// JSON-lines: one "episode" header line, one line per step, one "end" line.
void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace);
EpisodeTrace read_trace_jsonl(std::istream& in);
std::vector<EpisodeTrace> read_trace_dir(const std::string& dir);

// ---------------------------------------------------------------------------
// Knowledge
// ---------------------------------------------------------------------------

/// Per-cell backhaul feasibility in tenths: probability = (level + 0.5) / 10.
struct BackhaulMap {
    int width = 0;
    int height = 0;
    std::vector<int> level;

    double probability(GridCell c) const { return (level.at(c.y * width + c.x) + 0.5) / 10.0; }
    friend bool operator==(const BackhaulMap&, const BackhaulMap&) = default;
};

struct AccessEntry {
    GridCell waypoint;
    int cluster = 0;
    GridCell cluster_cell; ///< cluster location the rate was measured against
    long rate_kbps = 0;
    bool feasible = false;

    friend bool operator==(const AccessEntry&, const AccessEntry&) = default;
};

struct ReferencePlan {
    std::vector<int> order;
    std::vector<GridCell> waypoints;
    long throughput_kbps = 0;

    friend bool operator==(const ReferencePlan&, const ReferencePlan&) = default;
};

enum class CheckKind { AccessCheck, BackhaulCheck, LegalityCheck, CommitOrReject };

struct WorkflowCheck {
    CheckKind kind = CheckKind::CommitOrReject;
    long threshold_bps = 0;

    friend bool operator==(const WorkflowCheck&, const WorkflowCheck&) = default;
};

struct Workflow {
    std::vector<WorkflowCheck> checks;

    friend bool operator==(const Workflow&, const Workflow&) = default;
};

Workflow canonical_workflow(double access_threshold_bps, double backhaul_threshold_bps);

/// Near-duplicate of an access row; conflicting entries carry the opposite flag.
struct AnnotationEntry {
    AccessEntry entry;
    bool conflicting = false;

    friend bool operator==(const AnnotationEntry&, const AnnotationEntry&) = default;
};

struct KnowledgePack {
    int width = 8;
    int height = 8;
    NfzSchedule nfz_rule;
    std::vector<GridCell> obstacles;
    std::optional<BackhaulMap> backhaul_map;
    std::optional<Workflow> workflow;
    std::vector<AccessEntry> access;
    std::vector<ReferencePlan> plans;
    std::vector<AnnotationEntry> duplicates;
    std::vector<std::string> notes;

    /// Content visible at exposure level K.
    KnowledgePack slice(int level) const;
    friend bool operator==(const KnowledgePack&, const KnowledgePack&) = default;
};

struct PromotionConfig {
    int top_m = 3;
    int redundant_entries = 6;
    int conflicting_pairs = 2;
    int max_period = 96;
    int nfz_sense_radius = 1;
};

/// Smallest period <= max_period with one non-wrapping active window consistent
/// with every (absolute clock, active) observation. The cell is left default.
NfzSchedule induce_nfz_schedule(const std::vector<std::pair<long, bool>>& observations, int max_period = 96);

KnowledgePack promote(const std::vector<EpisodeTrace>& traces, const World& world, const PromotionConfig& config = {});

SerializedPack assemble_pack(const KnowledgePack& pack, int level);

struct ParsedPack {
    int level = 1;
    KnowledgePack pack;
};

ParsedPack parse_pack(const std::string& body);

// ---------------------------------------------------------------------------
// Activation
// ---------------------------------------------------------------------------

struct Situation {
    GridCell uav;
    std::set<int> remaining;
    long clock = 0;
};

/// The relevant subset of a pack for one decision.
struct ActiveKnowledge {
    int level = 1;
    int width = 8;
    int height = 8;
    NfzSchedule nfz_rule;
    std::vector<GridCell> obstacles;
    std::optional<BackhaulMap> backhaul_map;
    std::optional<Workflow> workflow;
    std::vector<AccessEntry> access;          ///< rows for remaining clusters only
    std::vector<ReferencePlan> plan_suffixes; ///< unserved suffixes that match the remaining set
    std::vector<AnnotationEntry> conflicts;   ///< conflicting annotation entries, passed through
};

/// Suffix of the plan whose cluster set equals `remaining`, if any.
std::optional<ReferencePlan> match_suffix(const ReferencePlan& plan, const std::set<int>& remaining);

ActiveKnowledge activate(const SerializedPack& pack, const Situation& situation);

} // namespace skypack
