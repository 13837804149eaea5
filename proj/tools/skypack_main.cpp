#include "skypack/harness.hpp"
#include "skypack/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace skypack;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCheck = 3;

struct Options {
    std::string config;
    std::uint64_t seed_base = 0;
    int episodes = 50;
    std::string method = "with_k";
    int k = 3;
    std::string out;
    bool llm = false;
    bool check = false;
    bool precached = false;
    std::string backhaul = "sampled";
    int threads = 1;
    std::string traces;
    std::string input;
    bool noise_free = false;
};

Experiment load(const Options& o)
{
    const MissionConfig mission = o.config.empty() ? default_mission_config() : load_mission_config(o.config);
    HarnessConfig hc;
    hc.backhaul = backhaul_mode_from_string(o.backhaul);
    Experiment e = make_experiment(mission, hc);
    if (o.llm) {
        e.llm = LlmConfig::from_env();
        if (!e.llm)
            throw ConfigError("--llm needs SKYPACK_LLM_URL and SKYPACK_LLM_MODEL in the environment");
    }
    return e;
}

MethodSpec method_of(const Options& o)
{
    MethodSpec m = MethodSpec::parse(o.method, o.k);
    m.precached = o.precached;
    m.llm = o.llm;
    return m;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << text;
}

void print_metrics(const Metrics& m)
{
    std::cout << m.method << ": episodes=" << m.episodes << " success_rate=" << m.success_rate()
              << " violation_rate=" << m.violation_rate() << " violations=" << m.violations_total
              << " mean_steps=" << m.mean_steps() << " tokens_per_step=" << m.tokens_per_step()
              << " mean_sync_tokens=" << m.mean_sync_tokens() << " mean_exchange_tokens=" << m.mean_exchange_tokens()
              << " stale_decisions=" << m.stale_decisions << "\n";
}

int cmd_run(const Options& o)
{
    const Experiment e = load(o);
    const EpisodeResult r = run_episode(e, method_of(o), o.seed_base);
    if (o.out.empty()) {
        write_event_log(std::cout, r);
    } else {
        std::ostringstream os;
        write_event_log(os, r);
        write_text(o.out, os.str());
        std::cout << "wrote " << o.out << "\n";
    }
    std::cerr << r.method << " seed=" << r.seed << " termination=" << r.termination << " success=" << r.success
              << " violations=" << r.violations.size() << " steps=" << r.reasoning_steps_total
              << " tokens=" << r.reasoning_tokens_total << "\n";
    return 0;
}

int cmd_eval(const Options& o)
{
    const Experiment e = load(o);
    std::vector<MethodSpec> methods;
    if (o.method == "all") {
        methods = {MethodSpec::with_k(o.k), MethodSpec::no_k(), MethodSpec::home_replan(), MethodSpec::greedy_step()};
        for (auto& m : methods)
            m.llm = o.llm;
    } else {
        methods = {method_of(o)};
    }
    ReportInput report;
    std::vector<EpisodeResult> all;
    bool check_ok = true;
    for (const auto& m : methods) {
        Evaluation ev = evaluate(e, m, o.episodes, o.seed_base, o.threads);
        print_metrics(ev.metrics);
        report.methods.push_back(ev.metrics);
        if (o.check && m.kind == MethodKind::WithK && m.k >= 3
            && (ev.metrics.successes != ev.metrics.episodes || ev.metrics.violations_total != 0)) {
            std::cerr << "check failed: " << m.name() << " is not perfectly reliable\n";
            check_ok = false;
        }
        all.insert(all.end(), std::make_move_iterator(ev.episodes.begin()), std::make_move_iterator(ev.episodes.end()));
    }
    if (o.check && o.method == "all") {
        const Metrics& wk = report.methods[0];
        const Metrics& nk = report.methods[1];
        if (!(nk.successes < nk.episodes || nk.violations_total > 0)) {
            std::cerr << "check failed: no_k matches the knowledge-driven agent's reliability\n";
            check_ok = false;
        }
        if (!(wk.mean_steps() < nk.mean_steps() && wk.tokens_per_step() < nk.tokens_per_step())) {
            std::cerr << "check failed: knowledge did not reduce reasoning cost\n";
            check_ok = false;
        }
    }
    if (!o.out.empty()) {
        write_text(std::filesystem::path(o.out) / "episodes.csv", episodes_csv(all));
        for (const auto& path : emit_report(report, o.out))
            std::cout << "wrote " << path << "\n";
    }
    return check_ok ? 0 : kExitCheck;
}

int cmd_sweep(const Options& o)
{
    const Experiment e = load(o);
    ReportInput report;
    report.sweep = sweep_k(e, {1, 2, 3, 4, 5}, o.episodes, o.seed_base, o.threads);
    for (const auto& m : report.sweep) {
        print_metrics(m);
        std::cout << "  pack_tokens=" << m.pack_tokens << "\n";
    }
    if (!o.out.empty())
        for (const auto& path : emit_report(report, o.out))
            std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_corpus(const Options& o)
{
    const MissionConfig mission = o.config.empty() ? default_mission_config() : load_mission_config(o.config);
    const World world = build_world(mission);
    CorpusOptions co;
    co.episodes = o.episodes;
    co.seed_base = o.seed_base;
    co.noise_free = o.noise_free;
    const auto corpus = generate_corpus(world, co);
    const std::filesystem::path dir = o.out.empty() ? "corpus" : o.out;
    std::filesystem::create_directories(dir);
    for (const auto& t : corpus) {
        char name[32];
        std::snprintf(name, sizeof name, "episode_%04ld.jsonl", t.episode_id);
        std::ofstream out(dir / name);
        write_trace_jsonl(out, t);
    }
    std::cout << "wrote " << corpus.size() << " traces to " << dir.string() << "\n";
    return 0;
}

int cmd_promote(const Options& o)
{
    const MissionConfig mission = o.config.empty() ? default_mission_config() : load_mission_config(o.config);
    const World world = build_world(mission);
    std::vector<EpisodeTrace> traces;
    if (o.traces.empty()) {
        CorpusOptions co;
        co.episodes = 20;
        co.seed_base = HarnessConfig{}.corpus_seed_base;
        traces = generate_corpus(world, co);
    } else {
        traces = read_trace_dir(o.traces);
    }
    const KnowledgePack pack = promote(traces, world);
    const SerializedPack sp = assemble_pack(pack, o.k);
    if (o.out.empty())
        std::cout << sp.body;
    else
        write_text(o.out, sp.body);
    std::cerr << "pack k=" << sp.level << " tokens=" << sp.token_count << "\n";
    return 0;
}

int cmd_rates(const Options& o)
{
    const MissionConfig mission = o.config.empty() ? default_mission_config() : load_mission_config(o.config);
    const World world = build_world(mission);
    std::ostringstream os;
    os << "uav_x,uav_y,link,target,target_x,target_y,expected_bps,feasible\n";
    char buf[64];
    for (int y = 0; y < world.height; ++y) {
        for (int x = 0; x < world.width; ++x) {
            const GridCell uav{x, y};
            for (const auto& c : world.clusters) {
                const double r = expected_rate_bps(world.access_link, geometry(world, uav, c.cell));
                std::snprintf(buf, sizeof buf, "%.3f", r);
                os << x << ',' << y << ",access,cluster" << c.id << ',' << c.cell.x << ',' << c.cell.y << ',' << buf
                   << ',' << (link_feasible(r, world.access_threshold_bps) ? 1 : 0) << '\n';
            }
            const double b = expected_rate_bps(world.backhaul_link, geometry(world, uav, world.home));
            std::snprintf(buf, sizeof buf, "%.3f", b);
            os << x << ',' << y << ",backhaul,home," << world.home.x << ',' << world.home.y << ',' << buf << ','
               << (link_feasible(b, world.backhaul_threshold_bps) ? 1 : 0) << '\n';
        }
    }
    if (o.out.empty())
        std::cout << os.str();
    else
        write_text(o.out, os.str());
    return 0;
}

int cmd_report(const Options& o)
{
    if (o.input.empty())
        throw ConfigError("report needs --in <results.json>");
    std::ifstream in(o.input);
    if (!in)
        throw IoError("cannot read " + o.input);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("results document: ") + e.what());
    }
    for (const auto& path : emit_report(report_input_from_json(doc), o.out.empty() ? "report" : o.out))
        std::cout << "wrote " << path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"skypack: knowledge packs for UAV macro decisions"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "mission config JSON");
        sub->add_option("--seed-base", o.seed_base, "first episode seed");
        sub->add_option("--out", o.out, "output file or directory");
        sub->add_option("--backhaul", o.backhaul, "sampled | always_up | down_at_disruptions");
        sub->add_flag("--llm", o.llm, "decide through the external chat-completion endpoint");
    };
    auto method_opts = [&](CLI::App* sub) {
        sub->add_option("--method", o.method, "with_k | no_k | home_replan | greedy_step");
        sub->add_option("--k", o.k, "exposure level 1..5")->check(CLI::Range(1, 5));
        sub->add_flag("--precached", o.precached, "pack onboard at departure");
    };

    auto* run = app.add_subcommand("run", "run one episode and print its event log");
    common(run);
    method_opts(run);
    auto* eval = app.add_subcommand("eval", "evaluate a method (or 'all') over seeded episodes");
    common(eval);
    method_opts(eval);
    eval->add_option("--episodes", o.episodes)->check(CLI::PositiveNumber);
    eval->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
    eval->add_flag("--check", o.check, "exit 3 when an acceptance property fails");
    auto* sweep = app.add_subcommand("sweep-k", "evaluate with_k for K = 1..5");
    common(sweep);
    sweep->add_option("--episodes", o.episodes)->check(CLI::PositiveNumber);
    sweep->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
    auto* corpus = app.add_subcommand("corpus", "write the scripted promotion corpus as trace files");
    common(corpus);
    corpus->add_option("--episodes", o.episodes)->check(CLI::PositiveNumber);
    corpus->add_flag("--noise-free", o.noise_free, "record expected link rates");
    auto* promote_cmd = app.add_subcommand("promote", "promote a trace directory into a pack");
    common(promote_cmd);
    promote_cmd->add_option("--traces", o.traces, "directory of *.jsonl traces (default: generated corpus)");
    promote_cmd->add_option("--k", o.k, "exposure level 1..5")->check(CLI::Range(1, 5));
    auto* rates = app.add_subcommand("rates", "dump expected access and backhaul rate maps as CSV");
    common(rates);
    auto* report = app.add_subcommand("report", "render CSV and SVG from a results.json");
    common(report);
    report->add_option("--in", o.input, "results.json written by eval or sweep-k");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(o);
        if (*eval)
            return cmd_eval(o);
        if (*sweep)
            return cmd_sweep(o);
        if (*corpus)
            return cmd_corpus(o);
        if (*promote_cmd)
            return cmd_promote(o);
        if (*rates)
            return cmd_rates(o);
        if (*report)
            return cmd_report(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
