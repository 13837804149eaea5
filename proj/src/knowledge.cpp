#include "skypack/knowledge.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace skypack {

std::string to_string(Action action)
{
    switch (action) {
    case Action::Move: return "move";
    case Action::Hover: return "hover";
    case Action::Serve: return "serve";
    case Action::Blocked: return "blocked";
    }
    return "hover";
}

namespace {

Action action_from_string(const std::string& s)
{
    if (s == "move") return Action::Move;
    if (s == "hover") return Action::Hover;
    if (s == "serve") return Action::Serve;
    if (s == "blocked") return Action::Blocked;
    throw ParseError("unknown action " + s);
}

Outcome outcome_from_string(const std::string& s)
{
    for (Outcome o : {Outcome::Moved, Outcome::Blocked, Outcome::Served, Outcome::ServeFailed, Outcome::Idle})
        if (to_string(o) == s)
            return o;
    throw ParseError("unknown outcome " + s);
}

} // namespace

// ---------------------------------------------------------------------------
// Trace JSON-lines
// ---------------------------------------------------------------------------

std::string step_json_line(const StepRecord& s)
{
    nlohmann::json j{{"type", "step"}, {"clock", s.clock}, {"cell", {s.cell.x, s.cell.y}},
        {"action", to_string(s.action)}, {"outcome", to_string(s.outcome)}};
    if (s.access_bps)
        j["access_bps"] = *s.access_bps;
    if (s.backhaul_bps)
        j["backhaul_bps"] = *s.backhaul_bps;
    if (s.nfz_active)
        j["nfz_active"] = *s.nfz_active;
    if (s.cluster >= 0) {
        j["cluster"] = s.cluster;
        j["cluster_cell"] = {s.cluster_cell.x, s.cluster_cell.y};
    }
    if (!s.disruptions.empty())
        j["disruptions"] = s.disruptions;
    return j.dump();
}

void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace)
{
    nlohmann::json header{{"type", "episode"}, {"episode_id", trace.episode_id}, {"start_offset", trace.start_offset}};
    out << header.dump() << '\n';
    for (const auto& s : trace.steps)
        out << step_json_line(s) << '\n';
    nlohmann::json end{{"type", "end"}, {"termination", trace.termination}};
    nlohmann::json tp = nlohmann::json::object();
    for (const auto& [id, bps] : trace.throughput_bps)
        tp[std::to_string(id)] = bps;
    end["throughput_bps"] = tp;
    out << end.dump() << '\n';
}

EpisodeTrace read_trace_jsonl(std::istream& in)
{
    EpisodeTrace trace;
    std::string line;
    bool have_header = false;
    bool have_end = false;
    long line_no = 0;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty())
                continue;
            const auto j = nlohmann::json::parse(line);
            const auto type = j.at("type").get<std::string>();
            if (type == "episode") {
                trace.episode_id = j.at("episode_id").get<long>();
                trace.start_offset = j.at("start_offset").get<long>();
                have_header = true;
            } else if (type == "step") {
                StepRecord s;
                s.clock = j.at("clock").get<long>();
                s.cell = {j.at("cell").at(0).get<int>(), j.at("cell").at(1).get<int>()};
                s.action = action_from_string(j.at("action").get<std::string>());
                s.outcome = outcome_from_string(j.at("outcome").get<std::string>());
                if (j.contains("access_bps"))
                    s.access_bps = j.at("access_bps").get<double>();
                if (j.contains("backhaul_bps"))
                    s.backhaul_bps = j.at("backhaul_bps").get<double>();
                if (j.contains("nfz_active"))
                    s.nfz_active = j.at("nfz_active").get<bool>();
                if (j.contains("cluster")) {
                    s.cluster = j.at("cluster").get<int>();
                    s.cluster_cell = {j.at("cluster_cell").at(0).get<int>(), j.at("cluster_cell").at(1).get<int>()};
                }
                if (j.contains("disruptions"))
                    s.disruptions = j.at("disruptions").get<std::vector<std::string>>();
                if (!trace.steps.empty() && s.clock <= trace.steps.back().clock)
                    throw ParseError("trace clocks must be strictly increasing");
                if (s.action == Action::Serve && !s.access_bps)
                    throw ParseError("serve record without a measured rate");
                trace.steps.push_back(std::move(s));
            } else if (type == "end") {
                trace.termination = j.at("termination").get<std::string>();
                for (const auto& [k, v] : j.at("throughput_bps").items())
                    trace.throughput_bps[std::stoi(k)] = v.get<double>();
                have_end = true;
            } else {
                throw ParseError("unknown record type " + type);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header || !have_end)
        throw ParseError("trace is missing its episode header or end record");
    return trace;
}

std::vector<EpisodeTrace> read_trace_dir(const std::string& dir)
{
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<EpisodeTrace> traces;
    for (const auto& f : files) {
        std::ifstream in(f);
        traces.push_back(read_trace_jsonl(in));
    }
    return traces;
}

// ---------------------------------------------------------------------------
// Pack content
// ---------------------------------------------------------------------------

Workflow canonical_workflow(double access_threshold_bps, double backhaul_threshold_bps)
{
    return Workflow{{
        {CheckKind::AccessCheck, std::llround(access_threshold_bps)},
        {CheckKind::BackhaulCheck, std::llround(backhaul_threshold_bps)},
        {CheckKind::LegalityCheck, 0},
        {CheckKind::CommitOrReject, 0},
    }};
}

KnowledgePack KnowledgePack::slice(int level) const
{
    KnowledgePack p = *this;
    if (level < 2)
        p.backhaul_map.reset();
    if (level < 3) {
        p.workflow.reset();
        p.access.clear();
    }
    if (level < 4)
        p.plans.clear();
    if (level < 5) {
        p.duplicates.clear();
        p.notes.clear();
    }
    return p;
}

NfzSchedule induce_nfz_schedule(const std::vector<std::pair<long, bool>>& observations, int max_period)
{
    if (observations.empty())
        throw InductionError("no NFZ observations");
    if (std::none_of(observations.begin(), observations.end(), [](const auto& o) { return o.second; }))
        throw InductionError("NFZ never observed active");

    for (int period = 1; period <= max_period; ++period) {
        // -1 unknown, 0 inactive, 1 active
        std::vector<int> label(period, -1);
        bool consistent = true;
        for (const auto& [clock, active] : observations) {
            long phase = clock % period;
            if (phase < 0)
                phase += period;
            const int want = active ? 1 : 0;
            if (label[phase] != -1 && label[phase] != want) {
                consistent = false;
                break;
            }
            label[phase] = want;
        }
        if (!consistent)
            continue;
        int first = -1;
        int last = -1;
        for (int p = 0; p < period; ++p) {
            if (label[p] == 1) {
                if (first < 0)
                    first = p;
                last = p;
            }
        }
        bool gap = false;
        for (int p = first; p <= last; ++p)
            gap = gap || label[p] == 0;
        if (gap)
            continue;
        NfzSchedule s;
        s.period_steps = period;
        s.active_start = first;
        s.active_len = last - first + 1;
        return s;
    }
    throw InductionError("no periodic window up to " + std::to_string(max_period) + " fits the observations");
}

namespace {

bool access_row_less(const AccessEntry& a, const AccessEntry& b)
{
    if (a.cluster != b.cluster)
        return a.cluster < b.cluster;
    if (a.waypoint != b.waypoint)
        return row_major_less(a.waypoint, b.waypoint);
    return row_major_less(a.cluster_cell, b.cluster_cell);
}

std::string mbps(long kbps)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << kbps / 1000.0;
    return os.str();
}

std::vector<AnnotationEntry> make_duplicates(const std::vector<AccessEntry>& access, int redundant, int conflicting)
{
    std::vector<AccessEntry> ranked = access;
    std::stable_sort(ranked.begin(), ranked.end(), [](const AccessEntry& a, const AccessEntry& b) {
        if (a.rate_kbps != b.rate_kbps)
            return a.rate_kbps > b.rate_kbps;
        return access_row_less(a, b);
    });
    std::vector<AnnotationEntry> out;
    for (int i = 0; i < redundant && i < static_cast<int>(ranked.size()); ++i) {
        AnnotationEntry e{ranked[i], i < conflicting};
        e.entry.rate_kbps = ranked[i].rate_kbps * (1000 - 25 * (i + 1)) / 1000;
        if (e.conflicting)
            e.entry.feasible = !e.entry.feasible;
        out.push_back(e);
    }
    return out;
}

std::vector<std::string> make_notes(const KnowledgePack& pack)
{
    std::vector<std::string> notes;
    const auto& n = pack.nfz_rule;
    notes.push_back("nfz " + to_string(n.cell) + " is closed for " + std::to_string(n.active_len) + " of every "
        + std::to_string(n.period_steps) + " steps starting at phase " + std::to_string(n.active_start)
        + "; wait outside rather than cross");
    std::map<int, std::vector<const AccessEntry*>> by_cluster;
    for (const auto& a : pack.access)
        by_cluster[a.cluster].push_back(&a);
    for (const auto& [id, rows] : by_cluster) {
        const AccessEntry* best = rows.front();
        int feasible = 0;
        for (const auto* r : rows) {
            if (r->rate_kbps > best->rate_kbps)
                best = r;
            feasible += r->feasible ? 1 : 0;
        }
        notes.push_back("cluster " + std::to_string(id) + " near " + to_string(best->cluster_cell) + ": hover at "
            + to_string(best->waypoint) + " for " + mbps(best->rate_kbps) + " Mbps; " + std::to_string(rows.size())
            + " waypoints logged, " + std::to_string(feasible) + " feasible; off-center hovers lose margin under blockage");
    }
    if (pack.backhaul_map) {
        int strong = 0;
        for (int l : pack.backhaul_map->level)
            strong += l >= 8 ? 1 : 0;
        notes.push_back("backhaul is reliable on " + std::to_string(strong)
            + " cells around home; request knowledge before leaving that ring");
    }
    return notes;
}

} // namespace

KnowledgePack promote(const std::vector<EpisodeTrace>& traces, const World& world, const PromotionConfig& config)
{
    if (traces.empty())
        throw std::invalid_argument("promotion needs at least one trace");

    KnowledgePack pack;
    pack.width = world.width;
    pack.height = world.height;

    std::vector<std::pair<long, bool>> nfz_obs;
    std::vector<int> bh_ok(world.width * world.height, 0);
    std::vector<int> bh_n(world.width * world.height, 0);
    std::map<std::tuple<int, int, int, int, int>, std::vector<double>> access_samples;
    struct Candidate {
        ReferencePlan plan;
    };
    std::vector<ReferencePlan> candidates;

    for (const auto& t : traces) {
        ReferencePlan plan;
        double throughput = 0.0;
        for (const auto& s : t.steps) {
            if (s.nfz_active)
                nfz_obs.emplace_back(s.clock + t.start_offset, *s.nfz_active);
            if (s.backhaul_bps && world.in_grid(s.cell)) {
                const int i = s.cell.y * world.width + s.cell.x;
                ++bh_n[i];
                bh_ok[i] += link_feasible(*s.backhaul_bps, world.backhaul_threshold_bps) ? 1 : 0;
            }
            if (s.action == Action::Serve && s.access_bps && s.cluster >= 0 && world.in_grid(s.cell)
                && !world.is_obstacle(s.cell)) {
                access_samples[{s.cluster, s.cell.y, s.cell.x, s.cluster_cell.y, s.cluster_cell.x}].push_back(*s.access_bps);
                if (s.outcome == Outcome::Served) {
                    plan.order.push_back(s.cluster);
                    plan.waypoints.push_back(s.cell);
                    throughput += *s.access_bps;
                }
            }
        }
        if (t.termination == "success" && !plan.order.empty()) {
            plan.throughput_kbps = std::llround(throughput / 1000.0);
            candidates.push_back(std::move(plan));
        }
    }

    if (world.nfz) {
        pack.nfz_rule = induce_nfz_schedule(nfz_obs, config.max_period);
        pack.nfz_rule.cell = world.nfz->cell;
    } else {
        pack.nfz_rule = NfzSchedule{};
        pack.nfz_rule.active_len = 0;
    }
    pack.obstacles = world.obstacles;

    BackhaulMap map{world.width, world.height, std::vector<int>(world.width * world.height, 0)};
    for (std::size_t i = 0; i < map.level.size(); ++i) {
        const double p = (bh_ok[i] + 1.0) / (bh_n[i] + 2.0);
        map.level[i] = std::min(9, static_cast<int>(std::floor(p * 10.0)));
    }
    pack.backhaul_map = map;

    pack.workflow = canonical_workflow(world.access_threshold_bps, world.backhaul_threshold_bps);
    for (auto& [key, samples] : access_samples) {
        std::sort(samples.begin(), samples.end());
        double sum = 0.0;
        for (double v : samples)
            sum += v;
        const double mean = sum / samples.size();
        const auto& [cluster, wy, wx, cy, cx] = key;
        pack.access.push_back({{wx, wy}, cluster, {cx, cy}, std::llround(mean / 1000.0),
            link_feasible(mean, world.access_threshold_bps)});
    }
    std::sort(pack.access.begin(), pack.access.end(), access_row_less);

    std::sort(candidates.begin(), candidates.end(), [](const ReferencePlan& a, const ReferencePlan& b) {
        if (a.throughput_kbps != b.throughput_kbps)
            return a.throughput_kbps > b.throughput_kbps;
        if (a.order != b.order)
            return a.order < b.order;
        return std::lexicographical_compare(a.waypoints.begin(), a.waypoints.end(), b.waypoints.begin(),
            b.waypoints.end(), row_major_less);
    });
    for (const auto& c : candidates) {
        if (static_cast<int>(pack.plans.size()) >= config.top_m)
            break;
        const bool dup = std::any_of(pack.plans.begin(), pack.plans.end(),
            [&](const ReferencePlan& p) { return p.order == c.order && p.waypoints == c.waypoints; });
        if (!dup)
            pack.plans.push_back(c);
    }

    pack.duplicates = make_duplicates(pack.access, config.redundant_entries, config.conflicting_pairs);
    pack.notes = make_notes(pack);
    return pack;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

std::string access_row(const AccessEntry& a)
{
    return to_string(a.waypoint) + " c" + std::to_string(a.cluster) + "@" + to_string(a.cluster_cell) + " "
        + std::to_string(a.rate_kbps) + " " + (a.feasible ? "+" : "-");
}

} // namespace

SerializedPack assemble_pack(const KnowledgePack& pack, int level)
{
    if (level < 1 || level > 5)
        throw std::invalid_argument("exposure level must be in [1, 5]");
    std::ostringstream os;
    os << "skypack-pack v1 k=" << level << " grid=" << pack.width << "x" << pack.height << "\n";
    const auto& n = pack.nfz_rule;
    os << "[nfz] " << to_string(n.cell) << " period=" << n.period_steps << " start=" << n.active_start
       << " len=" << n.active_len << "\n";
    os << "[obstacles]";
    for (const auto& o : pack.obstacles)
        os << " " << to_string(o);
    os << "\n";
    if (level >= 2) {
        os << "[backhaul]\n";
        if (pack.backhaul_map) {
            const auto& m = *pack.backhaul_map;
            for (int y = 0; y < m.height; ++y) {
                for (int x = 0; x < m.width; ++x)
                    os << static_cast<char>('0' + m.level[y * m.width + x]);
                os << "\n";
            }
        }
    }
    if (level >= 3) {
        os << "[workflow]";
        if (pack.workflow) {
            for (const auto& c : pack.workflow->checks) {
                switch (c.kind) {
                case CheckKind::AccessCheck: os << " access>" << c.threshold_bps; break;
                case CheckKind::BackhaulCheck: os << " backhaul>" << c.threshold_bps; break;
                case CheckKind::LegalityCheck: os << " legality"; break;
                case CheckKind::CommitOrReject: os << " commit|reject"; break;
                }
            }
        }
        os << "\n[access]\n";
        for (const auto& a : pack.access)
            os << access_row(a) << "\n";
    }
    if (level >= 4) {
        os << "[plans]\n";
        for (const auto& p : pack.plans) {
            os << p.throughput_kbps << " ";
            for (std::size_t i = 0; i < p.order.size(); ++i)
                os << (i ? "," : "") << p.order[i];
            for (const auto& w : p.waypoints)
                os << " " << to_string(w);
            os << "\n";
        }
    }
    if (level >= 5) {
        os << "[annotations]\n";
        for (const auto& d : pack.duplicates)
            os << (d.conflicting ? "conflict " : "dup ") << access_row(d.entry) << "\n";
        for (const auto& note : pack.notes)
            os << "note " << note << "\n";
    }
    os << "[end]\n";
    SerializedPack out;
    out.level = level;
    out.body = os.str();
    out.token_count = count_tokens(out.body);
    return out;
}

namespace {

int parse_int(const std::string& s)
{
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        throw ParseError("expected integer, got '" + s + "'");
    }
    if (used != s.size())
        throw ParseError("expected integer, got '" + s + "'");
    return v;
}

long parse_long(const std::string& s)
{
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(s, &used);
    } catch (const std::exception&) {
        throw ParseError("expected integer, got '" + s + "'");
    }
    if (used != s.size())
        throw ParseError("expected integer, got '" + s + "'");
    return v;
}

GridCell parse_cell(const std::string& s)
{
    const auto comma = s.find(',');
    if (comma == std::string::npos)
        throw ParseError("expected x,y cell, got '" + s + "'");
    return {parse_int(s.substr(0, comma)), parse_int(s.substr(comma + 1))};
}

std::string after_prefix(const std::string& token, const std::string& prefix)
{
    if (token.rfind(prefix, 0) != 0)
        throw ParseError("expected '" + prefix + "...', got '" + token + "'");
    return token.substr(prefix.size());
}

std::vector<std::string> split_ws(const std::string& line)
{
    std::istringstream is(line);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok)
        out.push_back(tok);
    return out;
}

AccessEntry parse_access_row(const std::vector<std::string>& t, std::size_t first)
{
    if (t.size() != first + 4)
        throw ParseError("malformed access row");
    AccessEntry a;
    a.waypoint = parse_cell(t[first]);
    const auto cl = after_prefix(t[first + 1], "c");
    const auto at = cl.find('@');
    if (at == std::string::npos)
        throw ParseError("malformed cluster reference '" + t[first + 1] + "'");
    a.cluster = parse_int(cl.substr(0, at));
    a.cluster_cell = parse_cell(cl.substr(at + 1));
    a.rate_kbps = parse_long(t[first + 2]);
    if (t[first + 3] != "+" && t[first + 3] != "-")
        throw ParseError("feasibility flag must be + or -");
    a.feasible = t[first + 3] == "+";
    return a;
}

} // namespace

ParsedPack parse_pack(const std::string& body)
{
    std::istringstream in(body);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line))
        lines.push_back(line);
    if (lines.empty())
        throw ParseError("empty pack");

    ParsedPack out;
    auto& pack = out.pack;
    {
        const auto t = split_ws(lines[0]);
        if (t.size() != 4 || t[0] != "skypack-pack" || t[1] != "v1")
            throw ParseError("bad pack header");
        out.level = parse_int(after_prefix(t[2], "k="));
        if (out.level < 1 || out.level > 5)
            throw ParseError("exposure level out of range");
        const auto grid = after_prefix(t[3], "grid=");
        const auto x = grid.find('x');
        if (x == std::string::npos)
            throw ParseError("bad grid size");
        pack.width = parse_int(grid.substr(0, x));
        pack.height = parse_int(grid.substr(x + 1));
        if (pack.width < 1 || pack.height < 1)
            throw ParseError("bad grid size");
    }

    std::size_t i = 1;
    auto expect_section = [&](const std::string& name) -> std::vector<std::string> {
        if (i >= lines.size())
            throw ParseError("missing section " + name);
        auto t = split_ws(lines[i]);
        if (t.empty() || t[0] != name)
            throw ParseError("expected section " + name + " at line " + std::to_string(i + 1));
        ++i;
        return t;
    };
    auto section_rows = [&]() {
        std::vector<std::vector<std::string>> rows;
        while (i < lines.size() && !(lines[i].size() > 0 && lines[i][0] == '[')) {
            rows.push_back(split_ws(lines[i]));
            ++i;
        }
        return rows;
    };

    {
        const auto t = expect_section("[nfz]");
        if (t.size() != 5)
            throw ParseError("malformed nfz rule");
        pack.nfz_rule.cell = parse_cell(t[1]);
        pack.nfz_rule.period_steps = parse_int(after_prefix(t[2], "period="));
        pack.nfz_rule.active_start = parse_int(after_prefix(t[3], "start="));
        pack.nfz_rule.active_len = parse_int(after_prefix(t[4], "len="));
    }
    {
        const auto t = expect_section("[obstacles]");
        for (std::size_t k = 1; k < t.size(); ++k)
            pack.obstacles.push_back(parse_cell(t[k]));
    }
    if (out.level >= 2) {
        expect_section("[backhaul]");
        const auto rows = section_rows();
        if (!rows.empty()) {
            BackhaulMap m{pack.width, pack.height, {}};
            if (static_cast<int>(rows.size()) != pack.height)
                throw ParseError("backhaul map has wrong row count");
            for (const auto& r : rows) {
                if (r.size() != 1 || static_cast<int>(r[0].size()) != pack.width)
                    throw ParseError("backhaul map row has wrong width");
                for (char c : r[0]) {
                    if (c < '0' || c > '9')
                        throw ParseError("backhaul level must be a digit");
                    m.level.push_back(c - '0');
                }
            }
            pack.backhaul_map = m;
        }
    }
    if (out.level >= 3) {
        const auto t = expect_section("[workflow]");
        Workflow wf;
        for (std::size_t k = 1; k < t.size(); ++k) {
            if (t[k].rfind("access>", 0) == 0)
                wf.checks.push_back({CheckKind::AccessCheck, parse_long(t[k].substr(7))});
            else if (t[k].rfind("backhaul>", 0) == 0)
                wf.checks.push_back({CheckKind::BackhaulCheck, parse_long(t[k].substr(9))});
            else if (t[k] == "legality")
                wf.checks.push_back({CheckKind::LegalityCheck, 0});
            else if (t[k] == "commit|reject")
                wf.checks.push_back({CheckKind::CommitOrReject, 0});
            else
                throw ParseError("unknown workflow check '" + t[k] + "'");
        }
        if (!wf.checks.empty()) {
            if (wf.checks.back().kind != CheckKind::CommitOrReject)
                throw ParseError("workflow must end with commit|reject");
            pack.workflow = wf;
        }
        expect_section("[access]");
        for (const auto& r : section_rows())
            pack.access.push_back(parse_access_row(r, 0));
    }
    if (out.level >= 4) {
        expect_section("[plans]");
        for (const auto& r : section_rows()) {
            if (r.size() < 2)
                throw ParseError("malformed plan row");
            ReferencePlan p;
            p.throughput_kbps = parse_long(r[0]);
            std::istringstream ids(r[1]);
            std::string id;
            while (std::getline(ids, id, ','))
                p.order.push_back(parse_int(id));
            for (std::size_t k = 2; k < r.size(); ++k)
                p.waypoints.push_back(parse_cell(r[k]));
            if (p.waypoints.size() != p.order.size())
                throw ParseError("plan order and waypoint counts differ");
            pack.plans.push_back(std::move(p));
        }
    }
    if (out.level >= 5) {
        expect_section("[annotations]");
        while (i < lines.size() && !(lines[i].size() > 0 && lines[i][0] == '[')) {
            const auto& l = lines[i];
            const auto t = split_ws(l);
            if (t.empty())
                throw ParseError("blank annotation line");
            if (t[0] == "dup" || t[0] == "conflict")
                pack.duplicates.push_back({parse_access_row(t, 1), t[0] == "conflict"});
            else if (t[0] == "note" && l.size() > 5)
                pack.notes.push_back(l.substr(5));
            else
                throw ParseError("unknown annotation '" + t[0] + "'");
            ++i;
        }
    }
    expect_section("[end]");
    if (i != lines.size())
        throw ParseError("trailing content after [end]");
    return out;
}

// ---------------------------------------------------------------------------
// Activation
// ---------------------------------------------------------------------------

std::optional<ReferencePlan> match_suffix(const ReferencePlan& plan, const std::set<int>& remaining)
{
    const std::size_t r = remaining.size();
    if (r == 0 || r > plan.order.size())
        return std::nullopt;
    const std::size_t start = plan.order.size() - r;
    std::set<int> tail(plan.order.begin() + start, plan.order.end());
    if (tail != remaining || tail.size() != r)
        return std::nullopt;
    ReferencePlan out;
    out.order.assign(plan.order.begin() + start, plan.order.end());
    out.waypoints.assign(plan.waypoints.begin() + start, plan.waypoints.end());
    out.throughput_kbps = plan.throughput_kbps;
    return out;
}

ActiveKnowledge activate(const SerializedPack& pack, const Situation& situation)
{
    const ParsedPack parsed = parse_pack(pack.body);
    const auto& p = parsed.pack;
    ActiveKnowledge a;
    a.level = parsed.level;
    a.width = p.width;
    a.height = p.height;
    a.nfz_rule = p.nfz_rule;
    a.obstacles = p.obstacles;
    a.backhaul_map = p.backhaul_map;
    a.workflow = p.workflow;
    for (const auto& row : p.access)
        if (situation.remaining.contains(row.cluster))
            a.access.push_back(row);
    for (const auto& plan : p.plans)
        if (auto suffix = match_suffix(plan, situation.remaining))
            a.plan_suffixes.push_back(std::move(*suffix));
    for (const auto& d : p.duplicates)
        if (d.conflicting)
            a.conflicts.push_back(d);
    return a;
}

} // namespace skypack
