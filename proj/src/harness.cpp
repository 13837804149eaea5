#include "skypack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

namespace skypack {

// ---------------------------------------------------------------------------
// Methods
// ---------------------------------------------------------------------------

MethodSpec MethodSpec::with_k(int k)
{
    if (k < 1 || k > 5)
        throw ConfigError("exposure level must be in [1, 5], got " + std::to_string(k));
    MethodSpec m;
    m.kind = MethodKind::WithK;
    m.k = k;
    return m;
}

MethodSpec MethodSpec::no_k()
{
    MethodSpec m;
    m.kind = MethodKind::NoK;
    m.k = 0;
    return m;
}

MethodSpec MethodSpec::home_replan()
{
    MethodSpec m;
    m.kind = MethodKind::HomeReplan;
    m.k = 0;
    return m;
}

MethodSpec MethodSpec::greedy_step()
{
    MethodSpec m;
    m.kind = MethodKind::GreedyStep;
    m.k = 0;
    return m;
}

MethodSpec MethodSpec::parse(const std::string& name, int k)
{
    if (name == "with_k")
        return with_k(k);
    if (name == "no_k")
        return no_k();
    if (name == "home_replan")
        return home_replan();
    if (name == "greedy_step")
        return greedy_step();
    throw ConfigError("unknown method '" + name + "' (expected with_k, no_k, home_replan or greedy_step)");
}

std::string MethodSpec::name() const
{
    std::string n;
    switch (kind) {
    case MethodKind::WithK: n = "with_k" + std::to_string(k); break;
    case MethodKind::NoK: n = "no_k"; break;
    case MethodKind::HomeReplan: n = "home_replan"; break;
    case MethodKind::GreedyStep: n = "greedy_step"; break;
    }
    if (precached)
        n += "_precached";
    if (llm)
        n += "_llm";
    return n;
}

std::string to_string(BackhaulMode mode)
{
    switch (mode) {
    case BackhaulMode::Sampled: return "sampled";
    case BackhaulMode::AlwaysUp: return "always_up";
    case BackhaulMode::DownAtDisruptions: return "down_at_disruptions";
    }
    return "sampled";
}

BackhaulMode backhaul_mode_from_string(const std::string& name)
{
    for (auto m : {BackhaulMode::Sampled, BackhaulMode::AlwaysUp, BackhaulMode::DownAtDisruptions})
        if (to_string(m) == name)
            return m;
    throw ConfigError("unknown backhaul mode '" + name + "'");
}

const SerializedPack& Experiment::pack_at(int k) const
{
    if (k < 1 || k > static_cast<int>(packs.size()))
        throw ConfigError("no pack at level " + std::to_string(k));
    return packs[k - 1];
}

// ---------------------------------------------------------------------------
// Shared episode plumbing
// ---------------------------------------------------------------------------

long sample_start_offset(const World& world, std::uint64_t seed)
{
    if (!world.nfz)
        return 0;
    RandomStream rng = RandomStream::derive(seed, "start_offset");
    return static_cast<long>(rng.below(static_cast<std::uint64_t>(world.nfz->period_steps)));
}

std::uint64_t fairness_hash(const DisruptionSet& disruptions, long start_offset)
{
    return fnv1a(to_json(disruptions).dump() + "|" + std::to_string(start_offset));
}

namespace {

double backhaul_sample(const World& world, GridCell cell, RandomStream& rng)
{
    return sample_rate_bps(world.backhaul_link, geometry(world, cell, world.home), rng);
}

/// Builds EpisodeTrace records from ticks.
class TraceRecorder {
public:
    TraceRecorder(const World& world, long start_offset, int sense_radius)
        : world_(world), start_offset_(start_offset), radius_(sense_radius)
    {
    }

    StepRecord base(long clock, GridCell cell, double backhaul_bps) const
    {
        StepRecord s;
        s.clock = clock;
        s.cell = cell;
        s.backhaul_bps = backhaul_bps;
        if (world_.nfz && chebyshev(cell, world_.nfz->cell) <= radius_)
            s.nfz_active = nfz_active(*world_.nfz, clock, start_offset_);
        return s;
    }

private:
    const World& world_;
    long start_offset_;
    int radius_;
};

Action tick_action(const TickRecord& t)
{
    if (t.blocked)
        return Action::Blocked;
    return t.moved ? Action::Move : Action::Hover;
}

std::string disruption_label(const Disruption& d)
{
    if (d.kind == DisruptionKind::ClusterDrift)
        return "drift:" + std::to_string(d.cluster) + ":" + to_string(d.offset);
    std::ostringstream os;
    os << "snr_drop:" << d.cluster << ":" << d.snr_drop_db;
    return os.str();
}

std::vector<StepRecord> tick_records(const TraceRecorder& rec, const AdvanceResult& r,
    const std::vector<double>& backhaul, const std::optional<double>& serve_rate_override)
{
    std::vector<StepRecord> out;
    for (std::size_t i = 0; i < r.ticks.size(); ++i) {
        const auto& t = r.ticks[i];
        StepRecord s = rec.base(t.clock, t.cell, backhaul[i]);
        s.action = tick_action(t);
        s.outcome = t.blocked ? Outcome::Blocked : t.moved ? Outcome::Moved : Outcome::Idle;
        for (const auto& rv : r.reveals)
            if (rv.clock == t.clock)
                s.disruptions.push_back(disruption_label(rv.disruption));
        const bool last = i + 1 == r.ticks.size();
        if (last && r.serve) {
            s.action = Action::Serve;
            s.outcome = r.outcome;
            s.access_bps = serve_rate_override ? *serve_rate_override : r.serve->rate_bps;
            s.cluster = r.serve->cluster;
            s.cluster_cell = r.serve->cluster_cell;
        }
        out.push_back(std::move(s));
    }
    return out;
}

GridCell offset_cell(GridCell c, GridCell by)
{
    return {c.x + by.x, c.y + by.y};
}

nlohmann::json cell_json(GridCell c)
{
    return nlohmann::json::array({c.x, c.y});
}

nlohmann::json decision_json(const MacroDecision& d)
{
    nlohmann::json j{{"waypoint", cell_json(d.waypoint)}, {"request_knowledge", d.request_knowledge}};
    j["cluster"] = d.next_cluster ? nlohmann::json(*d.next_cluster) : nlohmann::json(nullptr);
    return j;
}

} // namespace

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

std::vector<EpisodeTrace> generate_corpus(const World& world, const CorpusOptions& options)
{
    static constexpr std::array<GridCell, 5> kVariants{{{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    const int n_clusters = static_cast<int>(world.clusters.size());
    std::vector<EpisodeTrace> corpus;
    for (int i = 0; i < options.episodes; ++i) {
        const std::uint64_t seed = options.seed_base + static_cast<std::uint64_t>(i);
        const long offset = sample_start_offset(world, seed);
        RandomStream channel = RandomStream::derive(seed, "access_channel");
        RandomStream bh = RandomStream::derive(seed, "backhaul");
        EpisodeState state = initial_state(world, offset, {});
        TraceRecorder rec(world, offset, options.nfz_sense_radius);

        EpisodeTrace trace;
        trace.episode_id = i;
        trace.start_offset = offset;
        {
            const double rate = options.noise_free
                ? expected_rate_bps(world.backhaul_link, geometry(world, world.home, world.home))
                : backhaul_sample(world, world.home, bh);
            trace.steps.push_back(rec.base(0, world.home, rate));
        }

        std::vector<int> order;
        {
            std::vector<int> left;
            for (const auto& c : world.clusters)
                left.push_back(c.id);
            int cur = world.clusters[i % n_clusters].id;
            while (!left.empty()) {
                order.push_back(cur);
                std::erase(left, cur);
                if (left.empty())
                    break;
                const GridCell at = world.cluster(cur).cell;
                cur = *std::min_element(left.begin(), left.end(), [&](int a, int b) {
                    const int da = manhattan(at, world.cluster(a).cell);
                    const int db = manhattan(at, world.cluster(b).cell);
                    return da != db ? da < db : a < b;
                });
            }
        }
        const GridCell variant = kVariants[(i / n_clusters) % kVariants.size()];

        auto run_leg = [&](const MacroDecision& decision) {
            Path path = plan_path(world, state.uav, decision.waypoint, state.clock, offset, world.nfz,
                state.remaining_budget);
            if (path.empty())
                path = {state.uav};
            AdvanceResult r = advance(world, state, decision, path, channel);
            std::vector<double> rates;
            for (const auto& t : r.ticks)
                rates.push_back(options.noise_free
                        ? expected_rate_bps(world.backhaul_link, geometry(world, t.cell, world.home))
                        : backhaul_sample(world, t.cell, bh));
            std::optional<double> serve_rate;
            if (r.serve && options.noise_free) {
                serve_rate = expected_rate_bps(world.access_link, geometry(world, r.serve->waypoint, r.serve->cluster_cell));
                const bool ok = link_feasible(*serve_rate, world.access_threshold_bps);
                if (ok != r.serve->success) {
                    // Keep state consistent with the noise-free record.
                    r.serve->success = ok;
                    r.outcome = ok ? Outcome::Served : Outcome::ServeFailed;
                    if (ok)
                        r.state.remaining.erase(r.serve->cluster);
                    else
                        r.state.remaining.insert(r.serve->cluster);
                }
            }
            for (auto& s : tick_records(rec, r, rates, serve_rate))
                trace.steps.push_back(std::move(s));
            if (r.serve && r.serve->success)
                trace.throughput_bps[r.serve->cluster] = serve_rate ? *serve_rate : r.serve->rate_bps;
            state = r.state;
        };

        try {
            for (int id : order) {
                const GridCell own = world.cluster(id).cell;
                GridCell wp = offset_cell(own, variant);
                if (!world.in_grid(wp) || world.is_obstacle(wp) || world.is_nfz_cell(wp) || wp == world.home)
                    wp = own;
                for (const auto& c : world.clusters)
                    if (c.id != id && c.cell == wp)
                        wp = own;
                run_leg({id, wp, false});
            }
            run_leg({std::nullopt, world.home, false});
            trace.termination = state.remaining.empty() ? "success" : "incomplete";
        } catch (const BudgetExhausted&) {
            trace.termination = "budget_exhausted";
        } catch (const NoPathError&) {
            trace.termination = "no_path";
        }
        corpus.push_back(std::move(trace));
    }
    return corpus;
}

Experiment make_experiment(const MissionConfig& mission, const HarnessConfig& config)
{
    Experiment e;
    e.world = build_world(mission);
    e.config = config;
    CorpusOptions corpus;
    corpus.episodes = config.corpus_episodes;
    corpus.seed_base = config.corpus_seed_base;
    corpus.nfz_sense_radius = config.promotion.nfz_sense_radius;
    e.pack = promote(generate_corpus(e.world, corpus), e.world, config.promotion);
    for (int k = 1; k <= 5; ++k)
        e.packs.push_back(assemble_pack(e.pack, k));
    return e;
}

// ---------------------------------------------------------------------------
// Episode runner
// ---------------------------------------------------------------------------

namespace {

/// Path toward a decision waypoint. An obstacle waypoint is approached through its
/// nearest free neighbor and then entered, which the motion module blocks.
Path build_path(const World& world, const EpisodeState& s, GridCell target, const std::optional<NfzSchedule>& rule)
{
    if (world.is_obstacle(target)) {
        std::optional<GridCell> best;
        for (const GridCell off : {GridCell{0, -1}, GridCell{-1, 0}, GridCell{1, 0}, GridCell{0, 1}}) {
            const GridCell n = offset_cell(target, off);
            if (!world.in_grid(n) || world.is_obstacle(n))
                continue;
            if (!best || manhattan(s.uav, n) < manhattan(s.uav, *best))
                best = n;
        }
        Path p;
        if (best && *best != s.uav)
            p = plan_path(world, s.uav, *best, s.clock, s.start_offset, rule, s.remaining_budget);
        p.push_back(target);
        return p;
    }
    Path p = plan_path(world, s.uav, target, s.clock, s.start_offset, rule, s.remaining_budget);
    if (p.empty())
        p = {s.uav};
    return p;
}

} // namespace

EpisodeResult run_episode(const Experiment& experiment, const MethodSpec& method, std::uint64_t seed)
{
    const World& world = experiment.world;
    const HarnessConfig& cfg = experiment.config;
    const CostModel& cost = cfg.cost;

    EpisodeResult res;
    res.seed = seed;
    res.method = method.name();
    res.k = method.kind == MethodKind::WithK ? method.k : 0;
    res.start_offset = sample_start_offset(world, seed);
    res.disruptions = sample_disruptions(seed, world.disruptions, world);
    res.fairness_hash = fairness_hash(res.disruptions, res.start_offset);

    RandomStream channel = RandomStream::derive(seed, "access_channel");
    RandomStream bh_rng = RandomStream::derive(seed, "backhaul");
    RandomStream search_rng = RandomStream::derive(seed, "search");

    EpisodeState state = initial_state(world, res.start_offset, res.disruptions);
    CommsSession comms(world.backhaul_threshold_bps, cfg.sync_interval_s);
    TraceRecorder rec(world, res.start_offset, cfg.promotion.nfz_sense_radius);
    std::optional<LlmClient> llm;
    if (method.llm && experiment.llm)
        llm.emplace(*experiment.llm);

    auto log = [&](nlohmann::json j) {
        if (cfg.record_events)
            res.events.push_back(std::move(j));
    };
    auto log_comms = [&](std::size_t from) {
        for (std::size_t i = from; i < comms.events().size(); ++i) {
            auto j = to_json(comms.events()[i]);
            log(j);
        }
    };

    double bh_rate = backhaul_sample(world, world.home, bh_rng);
    res.trace.episode_id = static_cast<long>(seed);
    res.trace.start_offset = res.start_offset;
    res.trace.steps.push_back(rec.base(0, world.home, bh_rate));

    log({{"event", "episode_start"}, {"seed", seed}, {"method", res.method}, {"start_offset", res.start_offset},
        {"disruptions", to_json(res.disruptions)}, {"fairness_hash", res.fairness_hash}});

    const bool with_k = method.kind == MethodKind::WithK;
    const SerializedPack* pack = with_k ? &experiment.pack_at(method.k) : nullptr;
    if (with_k && method.precached)
        state.cached_pack = *pack;
    bool request = with_k && !method.precached;

    std::optional<ParsedPack> parsed_cache;
    auto cached_rule = [&]() -> std::optional<NfzSchedule> {
        if (!parsed_cache || parsed_cache->pack.nfz_rule.active_len <= 0)
            return std::nullopt;
        return parsed_cache->pack.nfz_rule;
    };
    if (state.cached_pack)
        parsed_cache = parse_pack(state.cached_pack->body);

    // Cloud policy state.
    MissionPlan plan;
    bool replan_pending = false;
    std::vector<Reveal> revealed;
    std::size_t reported_steps = 0; // trace records already uplinked
    const SerializedPack* home_pack = nullptr;
    if (method.kind == MethodKind::HomeReplan) {
        home_pack = &experiment.pack_at(cfg.home_plan_level);
        try {
            plan = home_plan(world, *home_pack, observe(world, state, true), cost);
        } catch (const PlannerError&) {
        }
    }

    bool force_down = false;
    bool finished = false;
    res.termination = "decision_limit";
    while (!finished && res.decisions < cfg.max_decisions) {
        double rate = bh_rate;
        if (cfg.backhaul == BackhaulMode::AlwaysUp)
            rate = cfg.forced_up_bps;
        else if (cfg.backhaul == BackhaulMode::DownAtDisruptions && force_down)
            rate = 0.0;

        if (with_k && request && !state.cached_pack) {
            const std::size_t before = comms.events().size();
            const SyncResult sr = comms.sync(*pack, rate, state.clock);
            log_comms(before);
            if (sr.outcome == SyncOutcome::Delivered) {
                state.cached_pack = *pack;
                parsed_cache = parse_pack(pack->body);
            }
        }

        const Observation obs = observe(world, state, link_feasible(rate, world.backhaul_threshold_bps));
        Decision decision;
        std::string policy;
        bool stale = false;
        std::optional<Path> stored_path;
        std::optional<NfzSchedule> rule;

        switch (method.kind) {
        case MethodKind::WithK: {
            PublicWorldView view = public_view(world);
            std::optional<ActiveKnowledge> active;
            if (state.cached_pack) {
                active = activate(*state.cached_pack, {obs.uav, obs.remaining_ids(), obs.clock});
                view = public_view(world, *active);
                rule = cached_rule();
            }
            if (llm) {
                const LlmDecision ld = llm_decide(*llm, obs, state.cached_pack, view, cost, search_rng);
                decision = ld.decision;
                policy = ld.fell_back ? "llm_fallback" : "llm";
            } else if (active && active->workflow) {
                try {
                    decision = procedural_decide(obs, *active, cost);
                    policy = "procedural";
                } catch (const NoFeasibleDecision& e) {
                    decision = search_decide(obs, view, cost, search_rng);
                    ReasoningTrace t = e.partial();
                    t.append(decision.trace);
                    decision.trace = t;
                    policy = "procedural_fallback";
                }
            } else {
                decision = search_decide(obs, view, cost, search_rng);
                policy = "search";
            }
            if (!state.cached_pack)
                decision.decision.request_knowledge = true;
            request = decision.decision.request_knowledge;
            break;
        }
        case MethodKind::NoK: {
            const PublicWorldView view = public_view(world);
            if (llm) {
                const LlmDecision ld = llm_decide(*llm, obs, std::nullopt, view, cost, search_rng);
                decision = ld.decision;
                policy = ld.fell_back ? "llm_fallback" : "llm";
            } else {
                decision = search_decide(obs, view, cost, search_rng);
                policy = "search";
            }
            decision.decision.request_knowledge = false;
            break;
        }
        case MethodKind::GreedyStep:
            decision = greedy_decide(obs, cost);
            policy = "greedy";
            break;
        case MethodKind::HomeReplan: {
            if (replan_pending) {
                const std::vector<StepRecord> fresh(res.trace.steps.begin() + static_cast<long>(reported_steps),
                    res.trace.steps.end());
                const std::string summary = serialize_summary(obs, revealed, fresh);
                const Observation home_obs = obs;
                const std::size_t before = comms.events().size();
                const ExchangeResult ex = comms.exchange(summary, rate, state.clock,
                    [&]() { return home_plan(world, *home_pack, home_obs, cost); });
                log_comms(before);
                if (const auto* d = std::get_if<PlanDelivery>(&ex)) {
                    plan = d->plan;
                    replan_pending = false;
                    reported_steps = res.trace.steps.size();
                } else {
                    stale = true;
                }
            }
            CloudStep step = cloud_follow(plan, obs, cost);
            decision.decision = step.decision;
            decision.trace = step.trace;
            stored_path = step.stored_path;
            policy = stale ? "stale_plan" : "plan";
            break;
        }
        }

        ++res.decisions;
        res.stale_decisions += stale ? 1 : 0;
        res.reasoning_steps_total += decision.trace.step_count();
        res.reasoning_tokens_total += decision.trace.token_count();

        const MacroDecision& md = decision.decision;
        const GridCell target = md.next_cluster ? md.waypoint : world.home;
        DecisionLog dl{state.clock, state.uav, md, policy, decision.trace.step_count(), decision.trace.token_count(),
            stale, Outcome::Idle};

        Path path;
        try {
            path = stored_path ? *stored_path : build_path(world, state, target, rule);
        } catch (const NoPathError& e) {
            res.decision_log.push_back(dl);
            res.termination = "no_path";
            log({{"event", "no_path"}, {"clock", state.clock}, {"detail", e.what()}});
            break;
        }

        AdvanceResult r;
        bool exhausted = false;
        try {
            r = advance(world, state, md, path, channel);
        } catch (const BudgetExhausted& e) {
            r = e.partial();
            exhausted = true;
        }

        std::vector<double> rates;
        for (const auto& t : r.ticks) {
            bh_rate = backhaul_sample(world, t.cell, bh_rng);
            rates.push_back(bh_rate);
        }
        for (auto& s : tick_records(rec, r, rates, std::nullopt))
            res.trace.steps.push_back(std::move(s));

        dl.outcome = r.outcome;
        res.decision_log.push_back(dl);
        log({{"event", "decision"}, {"clock", dl.clock}, {"uav", cell_json(dl.uav)}, {"decision", decision_json(md)},
            {"policy", policy}, {"steps", dl.steps}, {"tokens", dl.tokens}, {"stale", stale},
            {"outcome", to_string(r.outcome)}});
        for (const auto& t : r.ticks)
            log({{"event", "tick"}, {"clock", t.clock}, {"cell", cell_json(t.cell)}, {"moved", t.moved},
                {"blocked", t.blocked}});
        for (const auto& rv : r.reveals) {
            log({{"event", "reveal"}, {"clock", rv.clock}, {"kind", to_string(rv.disruption.kind)},
                {"cluster", rv.disruption.cluster}});
            revealed.push_back(rv);
        }
        if (r.serve)
            log({{"event", "serve"}, {"clock", state.clock + static_cast<long>(r.ticks.size())},
                {"cluster", r.serve->cluster}, {"waypoint", cell_json(r.serve->waypoint)},
                {"rate_bps", r.serve->rate_bps}, {"success", r.serve->success}});
        for (const auto& v : r.violations) {
            log({{"event", "violation"}, {"kind", to_string(v.kind)}, {"clock", v.clock}, {"cell", cell_json(v.cell)},
                {"cluster", v.cluster}});
            res.violations.push_back(v);
        }
        res.disruptions_revealed += static_cast<long>(r.reveals.size());
        res.ticks += static_cast<long>(r.ticks.size());

        if ((r.outcome == Outcome::ServeFailed || r.outcome == Outcome::Blocked) && md.next_cluster)
            r.state.failed.insert({*md.next_cluster, md.waypoint});
        const bool disrupted = !r.reveals.empty() || r.outcome == Outcome::ServeFailed || r.outcome == Outcome::Blocked;
        force_down = disrupted;
        if (disrupted)
            replan_pending = true;
        if (r.serve && r.serve->success)
            res.trace.throughput_bps[r.serve->cluster] = r.serve->rate_bps;

        state = r.state;
        if (exhausted) {
            res.termination = "budget_exhausted";
            finished = true;
        } else if (!md.next_cluster) {
            res.termination = state.remaining.empty() ? "success" : "aborted";
            finished = true;
        }
    }

    res.success = state.remaining.empty();
    res.ledger = comms.ledger();
    res.comms_events = comms.events();
    res.trace.termination = res.termination;
    log({{"event", "episode_end"}, {"termination", res.termination}, {"success", res.success},
        {"steps", res.reasoning_steps_total}, {"tokens", res.reasoning_tokens_total}, {"ledger", to_json(res.ledger)}});
    return res;
}

void write_event_log(std::ostream& out, const EpisodeResult& result)
{
    for (const auto& e : result.events)
        out << e.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

double ratio(long num, long den)
{
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

} // namespace

double Metrics::success_rate() const { return ratio(successes, episodes); }
double Metrics::violation_rate() const { return ratio(episodes_with_violation, episodes); }
double Metrics::mean_steps() const { return ratio(steps_total, episodes); }
double Metrics::mean_tokens() const { return ratio(tokens_total, episodes); }
double Metrics::tokens_per_step() const { return ratio(tokens_total, steps_total); }
double Metrics::mean_sync_tokens() const { return ratio(sync_tokens_total, episodes); }
double Metrics::mean_exchange_tokens() const { return ratio(exchange_tokens_total, exchange_count); }

Metrics aggregate(const std::string& method, int k, const std::vector<EpisodeResult>& episodes)
{
    Metrics m;
    m.method = method;
    m.k = k;
    for (const auto& e : episodes) {
        ++m.episodes;
        m.successes += e.success ? 1 : 0;
        m.episodes_with_violation += e.violations.empty() ? 0 : 1;
        m.violations_total += static_cast<long>(e.violations.size());
        m.steps_total += e.reasoning_steps_total;
        m.tokens_total += e.reasoning_tokens_total;
        m.decisions_total += e.decisions;
        m.sync_tokens_total += e.ledger.sync_tokens;
        m.exchange_tokens_total += e.ledger.exchange_tokens();
        m.exchange_count += e.ledger.exchange_count;
        m.outage_count += e.ledger.outage_count;
        m.stale_decisions += e.stale_decisions;
    }
    return m;
}

Evaluation evaluate(const Experiment& experiment, const MethodSpec& method, int n, std::uint64_t seed_base, int threads)
{
    if (n < 1)
        throw ConfigError("episode count must be at least 1");
    Evaluation ev;
    ev.episodes.resize(static_cast<std::size_t>(n));
    const int workers = std::clamp(threads, 1, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i)
            ev.episodes[i] = run_episode(experiment, method, seed_base + static_cast<std::uint64_t>(i));
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (int i = next++; i < n; i = next++)
                    ev.episodes[i] = run_episode(experiment, method, seed_base + static_cast<std::uint64_t>(i));
            });
        }
        for (auto& t : pool)
            t.join();
    }
    ev.metrics = aggregate(method.name(), method.kind == MethodKind::WithK ? method.k : 0, ev.episodes);
    if (method.kind == MethodKind::WithK)
        ev.metrics.pack_tokens = experiment.pack_at(method.k).token_count;
    return ev;
}

std::string episodes_csv(const std::vector<EpisodeResult>& episodes)
{
    std::ostringstream os;
    os << "seed,method,k,success,termination,violations,nfz_entries,collisions,failed_services,steps,tokens,"
          "decisions,stale_decisions,ticks,disruptions_revealed,sync_tokens,uplink_tokens,downlink_tokens,"
          "exchanges,outages,fairness_hash\n";
    for (const auto& e : episodes) {
        long nfz = 0, col = 0, fail = 0;
        for (const auto& v : e.violations) {
            nfz += v.kind == ViolationKind::NfzEntry;
            col += v.kind == ViolationKind::ObstacleCollision;
            fail += v.kind == ViolationKind::FailedService;
        }
        os << e.seed << ',' << e.method << ',' << e.k << ',' << (e.success ? 1 : 0) << ',' << e.termination << ','
           << e.violations.size() << ',' << nfz << ',' << col << ',' << fail << ',' << e.reasoning_steps_total << ','
           << e.reasoning_tokens_total << ',' << e.decisions << ',' << e.stale_decisions << ',' << e.ticks << ','
           << e.disruptions_revealed << ',' << e.ledger.sync_tokens << ',' << e.ledger.uplink_tokens << ','
           << e.ledger.downlink_tokens << ',' << e.ledger.exchange_count << ',' << e.ledger.outage_count << ','
           << e.fairness_hash << '\n';
    }
    return os.str();
}

std::vector<Metrics> sweep_k(const Experiment& experiment, const std::vector<int>& levels, int n,
    std::uint64_t seed_base, int threads)
{
    std::vector<Metrics> table;
    for (int k : levels)
        table.push_back(evaluate(experiment, MethodSpec::with_k(k), n, seed_base, threads).metrics);
    return table;
}

} // namespace skypack
