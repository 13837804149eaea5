#include "skypack/harness.hpp"
#include "skypack/report.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

using namespace skypack;

namespace {

const Experiment& experiment()
{
    static const Experiment e = make_experiment(default_mission_config());
    return e;
}

Experiment experiment_with(double p_drift, double p_snr)
{
    MissionConfig c = default_mission_config();
    c.disruptions.p_drift = p_drift;
    c.disruptions.p_snr = p_snr;
    return make_experiment(c);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

long count_of(const std::string& text, const std::string& needle)
{
    long n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
        ++n;
    return n;
}

} // namespace

TEST_CASE("method names and parsing")
{
    CHECK(MethodSpec::with_k(3).name() == "with_k3");
    CHECK(MethodSpec::no_k().name() == "no_k");
    CHECK(MethodSpec::home_replan().name() == "home_replan");
    CHECK(MethodSpec::greedy_step().name() == "greedy_step");
    CHECK(MethodSpec::parse("with_k", 5).k == 5);
    CHECK_THROWS_AS(MethodSpec::parse("dqn"), ConfigError);
    CHECK_THROWS_AS(MethodSpec::with_k(6), ConfigError);
    CHECK(backhaul_mode_from_string(to_string(BackhaulMode::DownAtDisruptions)) == BackhaulMode::DownAtDisruptions);
    CHECK_THROWS_AS(backhaul_mode_from_string("sometimes"), ConfigError);
}

TEST_CASE("experiment packs")
{
    const Experiment& e = experiment();
    REQUIRE(e.packs.size() == 5);
    for (int k = 1; k <= 5; ++k)
        CHECK(e.pack_at(k).level == k);
    CHECK(e.pack.nfz_rule == *e.world.nfz);
}

TEST_CASE("with_k(3) completes a disruption-free episode cleanly")
{
    const Experiment quiet = experiment_with(0.0, 0.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const EpisodeResult r = run_episode(quiet, MethodSpec::with_k(3), seed);
        CHECK(r.disruptions.empty());
        CHECK(r.success);
        CHECK(r.violations.empty());
        CHECK(r.termination == "success");
        CHECK(r.reasoning_tokens_total >= r.reasoning_steps_total * CostModel{}.min_cost());
        long steps = 0;
        for (const auto& d : r.decision_log)
            steps += d.steps;
        CHECK(steps == r.reasoning_steps_total);
        CHECK(r.decisions == static_cast<long>(r.decision_log.size()));
    }
}

TEST_CASE("greedy_step costs one reasoning step per decision")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const EpisodeResult r = run_episode(experiment(), MethodSpec::greedy_step(), seed);
        CHECK(r.reasoning_steps_total == r.decisions);
        for (const auto& d : r.decision_log)
            CHECK(d.steps == 1);
    }
}

TEST_CASE("episode invariants across methods")
{
    for (const MethodSpec& m : {MethodSpec::with_k(3), MethodSpec::with_k(5), MethodSpec::no_k(),
             MethodSpec::home_replan(), MethodSpec::greedy_step()}) {
        for (std::uint64_t seed = 0; seed < 15; ++seed) {
            const EpisodeResult r = run_episode(experiment(), m, seed);
            CHECK(r.decisions >= 1);
            CHECK(r.reasoning_steps_total >= r.decisions);
            CHECK(r.reasoning_tokens_total >= r.reasoning_steps_total * CostModel{}.min_cost());
            CHECK(r.ticks <= experiment().world.step_budget);
            if (r.success)
                CHECK(r.termination == "success");
            for (const auto& d : r.decision_log)
                CHECK(experiment().world.in_grid(d.decision.waypoint));
        }
    }
}

TEST_CASE("cross-method fairness: every method sees the same disruptions and start offset")
{
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        std::set<std::uint64_t> hashes;
        for (const MethodSpec& m : {MethodSpec::with_k(3), MethodSpec::no_k(), MethodSpec::home_replan(),
                 MethodSpec::greedy_step()}) {
            const EpisodeResult r = run_episode(experiment(), m, seed);
            hashes.insert(r.fairness_hash);
            CHECK(r.fairness_hash == fairness_hash(r.disruptions, r.start_offset));
            CHECK(r.disruptions == sample_disruptions(seed, experiment().world.disruptions, experiment().world));
            CHECK(r.start_offset == sample_start_offset(experiment().world, seed));
        }
        CHECK(hashes.size() == 1);
    }
}

TEST_CASE("a cached pack persists for the rest of the episode")
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const EpisodeResult r = run_episode(experiment(), MethodSpec::with_k(3), seed);
        CHECK(r.ledger.sync_count <= 1);
        bool synced = false;
        for (const auto& ev : r.comms_events)
            synced = synced || ev.kind == CommsEventKind::Sync;
        if (!synced)
            continue;
        long sync_clock = 0;
        for (const auto& ev : r.comms_events)
            if (ev.kind == CommsEventKind::Sync)
                sync_clock = ev.clock;
        for (const auto& d : r.decision_log)
            if (d.clock > sync_clock)
                CHECK_FALSE(d.decision.request_knowledge);
    }

    // A precached pack never costs sync tokens.
    MethodSpec pre = MethodSpec::with_k(3);
    pre.precached = true;
    for (std::uint64_t seed = 0; seed < 10; ++seed)
        CHECK(run_episode(experiment(), pre, seed).ledger.sync_tokens == 0);
}

TEST_CASE("home_replan: no disruptions, no exchanges")
{
    const Experiment quiet = experiment_with(0.0, 0.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const EpisodeResult r = run_episode(quiet, MethodSpec::home_replan(), seed);
        CHECK(r.ledger.exchange_count == 0);
        CHECK(r.ledger.total() == 0);
        for (const auto& d : r.decision_log)
            CHECK(d.steps == 1);
    }
}

TEST_CASE("home_replan: forced outage at disruptions leaves stale decisions")
{
    MissionConfig c = default_mission_config();
    HarnessConfig hc;
    hc.backhaul = BackhaulMode::DownAtDisruptions;
    const Experiment down = make_experiment(c, hc);
    hc.backhaul = BackhaulMode::AlwaysUp;
    const Experiment up = make_experiment(c, hc);
    long stale = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const EpisodeResult r = run_episode(down, MethodSpec::home_replan(), seed);
        stale += r.stale_decisions;
        if (r.disruptions_revealed > 0)
            CHECK(r.ledger.outage_count >= 1);
        const EpisodeResult u = run_episode(up, MethodSpec::home_replan(), seed);
        CHECK(u.ledger.outage_count == 0);
        CHECK(u.stale_decisions == 0);
    }
    CHECK(stale >= 1);
}

TEST_CASE("evaluate: single episode identity, determinism and thread independence")
{
    const MethodSpec m = MethodSpec::with_k(3);
    const Evaluation one = evaluate(experiment(), m, 1, 17);
    const EpisodeResult r = run_episode(experiment(), m, 17);
    CHECK(one.metrics.episodes == 1);
    CHECK(one.metrics.successes == (r.success ? 1 : 0));
    CHECK(one.metrics.steps_total == r.reasoning_steps_total);
    CHECK(one.metrics.tokens_total == r.reasoning_tokens_total);
    CHECK(one.metrics.mean_steps() == static_cast<double>(r.reasoning_steps_total));
    CHECK(one.metrics.violations_total == static_cast<long>(r.violations.size()));

    for (const MethodSpec& spec : {MethodSpec::with_k(3), MethodSpec::no_k(), MethodSpec::home_replan()}) {
        const Evaluation a = evaluate(experiment(), spec, 30, 100);
        const Evaluation b = evaluate(experiment(), spec, 30, 100);
        const Evaluation par = evaluate(experiment(), spec, 30, 100, 4);
        CHECK(a.metrics == b.metrics);
        CHECK(a.metrics == par.metrics);
        CHECK(episodes_csv(a.episodes) == episodes_csv(par.episodes));
        CHECK(a.metrics.success_rate() >= 0.0);
        CHECK(a.metrics.success_rate() <= 1.0);
        CHECK(a.metrics.violation_rate() >= 0.0);
        CHECK(a.metrics.violation_rate() <= 1.0);
    }
}

TEST_CASE("aggregation does not depend on completion order")
{
    Evaluation ev = evaluate(experiment(), MethodSpec::no_k(), 40, 0);
    const Metrics ref = aggregate(ev.metrics.method, ev.metrics.k, ev.episodes);
    std::mt19937 shuffle(5);
    for (int i = 0; i < 5; ++i) {
        std::shuffle(ev.episodes.begin(), ev.episodes.end(), shuffle);
        CHECK(aggregate(ref.method, ref.k, ev.episodes) == ref);
    }
}

TEST_CASE("sweep_k payloads grow with K")
{
    const auto table = sweep_k(experiment(), {1, 2, 3, 4, 5}, 10, 0);
    REQUIRE(table.size() == 5);
    for (std::size_t i = 1; i < table.size(); ++i)
        CHECK(table[i].pack_tokens > table[i - 1].pack_tokens);
    for (std::size_t i = 0; i < table.size(); ++i)
        CHECK(table[i].k == static_cast<int>(i) + 1);
}

TEST_CASE("knowledge dominance over search")
{
    const Metrics k3 = evaluate(experiment(), MethodSpec::with_k(3), 50, 0).metrics;
    const Metrics search = evaluate(experiment(), MethodSpec::no_k(), 50, 0).metrics;
    CHECK(k3.mean_steps() < search.mean_steps());

    const Metrics calm = evaluate(experiment_with(0.0, experiment().world.disruptions.p_snr), MethodSpec::no_k(), 50, 0).metrics;
    const Metrics drifty = evaluate(experiment_with(0.25, experiment().world.disruptions.p_snr), MethodSpec::no_k(), 50, 0).metrics;
    CHECK(calm.mean_steps() < drifty.mean_steps());
}

TEST_CASE("episode CSV and event log")
{
    const Evaluation ev = evaluate(experiment(), MethodSpec::with_k(3), 3, 0);
    const std::string csv = episodes_csv(ev.episodes);
    CHECK(count_of(csv, "\n") == 4);
    CHECK(csv.rfind("seed,", 0) == 0);

    std::ostringstream log;
    write_event_log(log, ev.episodes[0]);
    std::istringstream lines(log.str());
    std::string line;
    long n = 0;
    while (std::getline(lines, line)) {
        CHECK(nlohmann::json::parse(line).contains("event"));
        ++n;
    }
    CHECK(n >= ev.episodes[0].decisions);
}

TEST_CASE("corpus shape")
{
    const auto corpus = generate_corpus(experiment().world, CorpusOptions{});
    REQUIRE(corpus.size() == 20);
    for (const auto& t : corpus) {
        CHECK(t.termination == "success");
        CHECK(t.throughput_bps.size() == 4);
        REQUIRE(!t.steps.empty());
        CHECK(t.steps.front().clock == 0);
        CHECK(t.steps.back().cell == experiment().world.home);
    }
}

TEST_CASE("report: SVG shape and byte stability")
{
    const auto table = sweep_k(experiment(), {1, 2, 3, 4, 5}, 5, 0);
    const std::string svg = svg_steps_vs_k(table);
    CHECK(count_of(svg, "<polyline") == 1);
    const std::regex points("points=\"([^\"]*)\"");
    std::smatch m;
    REQUIRE(std::regex_search(svg, m, points));
    CHECK(count_of(m[1].str(), ",") == 5);
    CHECK(svg == svg_steps_vs_k(table));

    Metrics clean;
    clean.method = "clean";
    clean.episodes = 10;
    clean.successes = 10;
    const std::string bars = svg_reliability({clean});
    const std::regex violation("<rect class=\"violation\"[^>]*height=\"([0-9.]+)\"");
    REQUIRE(std::regex_search(bars, m, violation));
    CHECK(m[1].str() == "0.0");

    ReportInput in;
    in.methods = {evaluate(experiment(), MethodSpec::with_k(3), 5, 0).metrics, clean};
    in.sweep = table;
    in.amortization = amortization_compare(CommsLedger{400, 0, 0, 0, 0, 1}, CommsLedger{0, 600, 400, 2, 0, 0});
    const auto dir = std::filesystem::temp_directory_path() / "skypack_report_test";
    std::filesystem::remove_all(dir);
    const auto files = emit_report(in, (dir / "a").string());
    CHECK(files.size() == 6);
    const ReportInput back = report_input_from_json(nlohmann::json::parse(slurp(dir / "a" / "results.json")));
    CHECK(back.methods == in.methods);
    CHECK(back.sweep == in.sweep);
    emit_report(back, (dir / "b").string());
    for (const char* name : {"results.json", "metrics.csv", "sweep.csv", "steps_vs_k.svg", "reliability.svg",
             "amortization.svg"})
        CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
    CHECK(count_of(slurp(dir / "a" / "amortization.svg"), "<polyline") == 2);

    std::ofstream(dir / "blocker") << "x";
    CHECK_THROWS_AS(emit_report(in, (dir / "blocker" / "sub").string()), IoError);
    CHECK_THROWS_AS(emit_report(ReportInput{}, (dir / "c").string()), IoError);
    std::filesystem::remove_all(dir);
}
