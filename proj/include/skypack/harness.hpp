#pragma once

#include "skypack/comms.hpp"
#include "skypack/gridworld.hpp"
#include "skypack/knowledge.hpp"
#include "skypack/llm_client.hpp"
#include "skypack/reasoner.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace skypack {

enum class MethodKind { WithK, NoK, HomeReplan, GreedyStep };

struct MethodSpec {
    MethodKind kind = MethodKind::WithK;
    int k = 3;
    bool precached = false; ///< pack already onboard at departure, no sync charged
    bool llm = false;       ///< decide through the external adapter when configured

    static MethodSpec with_k(int k);
    static MethodSpec no_k();
    static MethodSpec home_replan();
    static MethodSpec greedy_step();
    /// Accepts with_k, no_k, home_replan, greedy_step. Throws ConfigError.
    static MethodSpec parse(const std::string& name, int k = 3);

    std::string name() const;
};

enum class BackhaulMode {
    Sampled,          ///< per-tick draws from the backhaul link model
    AlwaysUp,         ///< every decision sees forced_up_bps
    DownAtDisruptions ///< the decision right after a reveal or failed serve sees rate 0
};

std::string to_string(BackhaulMode mode);
BackhaulMode backhaul_mode_from_string(const std::string& name);

struct HarnessConfig {
    BackhaulMode backhaul = BackhaulMode::Sampled;
    int max_decisions = 64;
    double sync_interval_s = 1.0;
    double forced_up_bps = 50e6;
    CostModel cost;
    PromotionConfig promotion;
    int corpus_episodes = 20;
    std::uint64_t corpus_seed_base = 10000;
    int home_plan_level = 4;
    bool record_events = true;
};

/// World plus the knowledge Home holds before any evaluated episode.
struct Experiment {
    World world;
    HarnessConfig config;
    KnowledgePack pack;
    std::vector<SerializedPack> packs; ///< index K-1
    std::optional<LlmConfig> llm;

    const SerializedPack& pack_at(int k) const;
};

/// Builds the world, generates the promotion corpus and promotes the default pack.
Experiment make_experiment(const MissionConfig& mission, const HarnessConfig& config = {});

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

struct CorpusOptions {
    int episodes = 20;
    std::uint64_t seed_base = 10000;
    bool noise_free = false; ///< record expected rather than sampled link rates
    int nfz_sense_radius = 1;
};

/// Scripted disruption-free tours run at Home with full ground truth: episode i
/// starts at cluster i % N, continues nearest-first, hovers at variant (i / N) % 5
/// of {own, +x, -x, +y, -y} and returns Home.
std::vector<EpisodeTrace> generate_corpus(const World& world, const CorpusOptions& options);

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

struct DecisionLog {
    long clock = 0;
    GridCell uav;
    MacroDecision decision;
    std::string policy;
    long steps = 0;
    long tokens = 0;
    bool stale = false;
    Outcome outcome = Outcome::Idle;
};

struct EpisodeResult {
    std::uint64_t seed = 0;
    std::string method;
    int k = 0;
    bool success = false;
    std::string termination;
    std::vector<Violation> violations;
    long reasoning_steps_total = 0;
    long reasoning_tokens_total = 0;
    long decisions = 0;
    long stale_decisions = 0;
    long ticks = 0;
    long disruptions_revealed = 0;
    CommsLedger ledger;
    std::vector<CommsEvent> comms_events;
    std::vector<DecisionLog> decision_log;
    std::uint64_t fairness_hash = 0;
    long start_offset = 0;
    DisruptionSet disruptions;
    EpisodeTrace trace;
    std::vector<nlohmann::json> events;
};

/// Episode start offset in [0, NFZ period).
long sample_start_offset(const World& world, std::uint64_t seed);

/// Hash of the disruption set and start offset a seed hands to every method.
std::uint64_t fairness_hash(const DisruptionSet& disruptions, long start_offset);

EpisodeResult run_episode(const Experiment& experiment, const MethodSpec& method, std::uint64_t seed);

void write_event_log(std::ostream& out, const EpisodeResult& result);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct Metrics {
    std::string method;
    int k = 0;
    long episodes = 0;
    long successes = 0;
    long episodes_with_violation = 0;
    long violations_total = 0;
    long steps_total = 0;
    long tokens_total = 0;
    long decisions_total = 0;
    long sync_tokens_total = 0;
    long exchange_tokens_total = 0;
    long exchange_count = 0;
    long outage_count = 0;
    long stale_decisions = 0;
    long pack_tokens = 0;

    double success_rate() const;
    double violation_rate() const;
    double mean_steps() const;
    double mean_tokens() const;
    double tokens_per_step() const;
    double mean_sync_tokens() const;
    double mean_exchange_tokens() const;
    friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Integer sums only, so the result does not depend on episode order.
Metrics aggregate(const std::string& method, int k, const std::vector<EpisodeResult>& episodes);

struct Evaluation {
    Metrics metrics;
    std::vector<EpisodeResult> episodes;
};

/// Seeds seed_base .. seed_base + n - 1. Episodes may run on `threads` workers.
Evaluation evaluate(const Experiment& experiment, const MethodSpec& method, int n, std::uint64_t seed_base,
    int threads = 1);

std::string episodes_csv(const std::vector<EpisodeResult>& episodes);

std::vector<Metrics> sweep_k(const Experiment& experiment, const std::vector<int>& levels, int n,
    std::uint64_t seed_base, int threads = 1);

} // namespace skypack
