#include "skypack/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace skypack {

nlohmann::json to_json(const Metrics& m)
{
    return {{"method", m.method}, {"k", m.k}, {"episodes", m.episodes}, {"successes", m.successes},
        {"episodes_with_violation", m.episodes_with_violation}, {"violations_total", m.violations_total},
        {"steps_total", m.steps_total}, {"tokens_total", m.tokens_total}, {"decisions_total", m.decisions_total},
        {"sync_tokens_total", m.sync_tokens_total}, {"exchange_tokens_total", m.exchange_tokens_total},
        {"exchange_count", m.exchange_count}, {"outage_count", m.outage_count},
        {"stale_decisions", m.stale_decisions}, {"pack_tokens", m.pack_tokens}};
}

Metrics metrics_from_json(const nlohmann::json& j)
{
    Metrics m;
    m.method = j.at("method").get<std::string>();
    m.k = j.at("k").get<int>();
    m.episodes = j.at("episodes").get<long>();
    m.successes = j.at("successes").get<long>();
    m.episodes_with_violation = j.at("episodes_with_violation").get<long>();
    m.violations_total = j.at("violations_total").get<long>();
    m.steps_total = j.at("steps_total").get<long>();
    m.tokens_total = j.at("tokens_total").get<long>();
    m.decisions_total = j.at("decisions_total").get<long>();
    m.sync_tokens_total = j.at("sync_tokens_total").get<long>();
    m.exchange_tokens_total = j.at("exchange_tokens_total").get<long>();
    m.exchange_count = j.at("exchange_count").get<long>();
    m.outage_count = j.at("outage_count").get<long>();
    m.stale_decisions = j.at("stale_decisions").get<long>();
    m.pack_tokens = j.at("pack_tokens").get<long>();
    return m;
}

nlohmann::json to_json(const AmortizationRecord& a)
{
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : a.curve)
        curve.push_back({{"disruptions", p.disruptions}, {"cached_tokens", p.cached_tokens},
            {"replan_tokens", p.replan_tokens}});
    nlohmann::json j{{"cached_total", a.cached_total}, {"replan_total", a.replan_total},
        {"per_exchange_tokens", a.per_exchange_tokens}, {"curve", curve}};
    j["d_star"] = a.d_star ? nlohmann::json(*a.d_star) : nlohmann::json(nullptr);
    return j;
}

AmortizationRecord amortization_from_json(const nlohmann::json& j)
{
    AmortizationRecord a;
    a.cached_total = j.at("cached_total").get<long>();
    a.replan_total = j.at("replan_total").get<long>();
    a.per_exchange_tokens = j.at("per_exchange_tokens").get<long>();
    for (const auto& p : j.at("curve"))
        a.curve.push_back({p.at("disruptions").get<int>(), p.at("cached_tokens").get<long>(),
            p.at("replan_tokens").get<long>()});
    if (!j.at("d_star").is_null())
        a.d_star = j.at("d_star").get<int>();
    return a;
}

nlohmann::json to_json(const ReportInput& input)
{
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : input.methods)
        methods.push_back(to_json(m));
    nlohmann::json sweep = nlohmann::json::array();
    for (const auto& m : input.sweep)
        sweep.push_back(to_json(m));
    nlohmann::json j{{"methods", methods}, {"sweep", sweep}};
    j["amortization"] = input.amortization ? to_json(*input.amortization) : nlohmann::json(nullptr);
    return j;
}

ReportInput report_input_from_json(const nlohmann::json& j)
{
    ReportInput in;
    try {
        for (const auto& m : j.at("methods"))
            in.methods.push_back(metrics_from_json(m));
        for (const auto& m : j.at("sweep"))
            in.sweep.push_back(metrics_from_json(m));
        if (j.contains("amortization") && !j.at("amortization").is_null())
            in.amortization = amortization_from_json(j.at("amortization"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed results document: ") + e.what());
    }
    return in;
}

namespace {

std::string fixed(double v, int decimals = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string svg_open(int w, int h, const std::string& title)
{
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
       << " " << h << "\">\n";
    os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
       << title << "</text>\n";
    return os.str();
}

struct Frame {
    double left = 60, right = 20, top = 36, bottom = 44;
    double width = 480, height = 300;

    double x0() const { return left; }
    double x1() const { return width - right; }
    double y0() const { return height - bottom; }
    double y1() const { return top; }
};

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel)
{
    std::ostringstream os;
    os << "<line x1=\"" << fixed(f.x0(), 1) << "\" y1=\"" << fixed(f.y0(), 1) << "\" x2=\"" << fixed(f.x1(), 1)
       << "\" y2=\"" << fixed(f.y0(), 1) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << fixed(f.x0(), 1) << "\" y1=\"" << fixed(f.y0(), 1) << "\" x2=\"" << fixed(f.x0(), 1)
       << "\" y2=\"" << fixed(f.y1(), 1) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed((f.x0() + f.x1()) / 2, 1) << "\" y=\"" << fixed(f.height - 8, 1)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlabel << "</text>\n";
    os << "<text x=\"14\" y=\"" << fixed((f.y0() + f.y1()) / 2, 1) << "\" transform=\"rotate(-90 14 "
       << fixed((f.y0() + f.y1()) / 2, 1) << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << ylabel << "</text>\n";
    return os.str();
}

std::string label(double x, double y, const std::string& text, const char* anchor = "middle")
{
    std::ostringstream os;
    os << "<text x=\"" << fixed(x, 1) << "\" y=\"" << fixed(y, 1) << "\" text-anchor=\"" << anchor
       << "\" font-family=\"sans-serif\" font-size=\"10\">" << text << "</text>\n";
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out)
        throw IoError("failed writing " + path.string());
}

} // namespace

std::string metrics_csv(const std::vector<Metrics>& rows)
{
    std::ostringstream os;
    os << "method,k,episodes,success_rate,violation_rate,violations_total,mean_steps,mean_tokens,tokens_per_step,"
          "mean_sync_tokens,mean_exchange_tokens,exchange_count,outage_count,stale_decisions,pack_tokens\n";
    for (const auto& m : rows) {
        os << m.method << ',' << m.k << ',' << m.episodes << ',' << fixed(m.success_rate()) << ','
           << fixed(m.violation_rate()) << ',' << m.violations_total << ',' << fixed(m.mean_steps()) << ','
           << fixed(m.mean_tokens()) << ',' << fixed(m.tokens_per_step()) << ',' << fixed(m.mean_sync_tokens()) << ','
           << fixed(m.mean_exchange_tokens()) << ',' << m.exchange_count << ',' << m.outage_count << ','
           << m.stale_decisions << ',' << m.pack_tokens << '\n';
    }
    return os.str();
}

std::string svg_steps_vs_k(const std::vector<Metrics>& sweep)
{
    Frame f;
    std::ostringstream os;
    os << svg_open(static_cast<int>(f.width), static_cast<int>(f.height), "Mean reasoning steps vs exposure level K");
    os << axes(f, "K", "mean reasoning steps");
    if (!sweep.empty()) {
        double lo = sweep.front().mean_steps();
        double hi = lo;
        for (const auto& m : sweep) {
            lo = std::min(lo, m.mean_steps());
            hi = std::max(hi, m.mean_steps());
        }
        const double pad = std::max(1.0, (hi - lo) * 0.1);
        lo = std::max(0.0, lo - pad);
        hi += pad;
        const std::size_t n = sweep.size();
        auto px = [&](std::size_t i) {
            return n == 1 ? (f.x0() + f.x1()) / 2 : f.x0() + 30 + (f.x1() - f.x0() - 60) * i / (n - 1.0);
        };
        auto py = [&](double v) { return f.y0() - (v - lo) / (hi - lo) * (f.y0() - f.y1()); };
        os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < n; ++i)
            os << (i ? " " : "") << fixed(px(i), 1) << "," << fixed(py(sweep[i].mean_steps()), 1);
        os << "\"/>\n";
        for (std::size_t i = 0; i < n; ++i) {
            os << "<circle cx=\"" << fixed(px(i), 1) << "\" cy=\"" << fixed(py(sweep[i].mean_steps()), 1)
               << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
            os << label(px(i), f.y0() + 14, "K=" + std::to_string(sweep[i].k));
            os << label(px(i), py(sweep[i].mean_steps()) - 8, fixed(sweep[i].mean_steps(), 2));
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_reliability(const std::vector<Metrics>& methods)
{
    Frame f;
    f.width = std::max(480.0, 120.0 * methods.size() + 80);
    std::ostringstream os;
    os << svg_open(static_cast<int>(f.width), static_cast<int>(f.height), "Success and violation rate by method");
    os << axes(f, "method", "rate");
    const double span = f.x1() - f.x0();
    const double slot = methods.empty() ? span : span / methods.size();
    auto py = [&](double v) { return f.y0() - v * (f.y0() - f.y1()); };
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const auto& m = methods[i];
        const double x = f.x0() + slot * i + slot * 0.15;
        const double w = slot * 0.3;
        const double s = m.success_rate();
        const double v = m.violation_rate();
        os << "<rect class=\"success\" x=\"" << fixed(x, 1) << "\" y=\"" << fixed(py(s), 1) << "\" width=\""
           << fixed(w, 1) << "\" height=\"" << fixed(f.y0() - py(s), 1) << "\" fill=\"#2ca02c\"/>\n";
        os << "<rect class=\"violation\" x=\"" << fixed(x + w, 1) << "\" y=\"" << fixed(py(v), 1) << "\" width=\""
           << fixed(w, 1) << "\" height=\"" << fixed(f.y0() - py(v), 1) << "\" fill=\"#d62728\"/>\n";
        os << label(x + w, f.y0() + 14, m.method);
        os << label(x + w / 2, py(s) - 4, fixed(s, 2));
        os << label(x + 1.5 * w, py(v) - 4, fixed(v, 2));
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_amortization(const AmortizationRecord& record)
{
    Frame f;
    std::ostringstream os;
    os << svg_open(static_cast<int>(f.width), static_cast<int>(f.height), "Cumulative backhaul tokens vs disruptions");
    os << axes(f, "disruption events", "cumulative tokens");
    if (!record.curve.empty()) {
        long hi = 1;
        for (const auto& p : record.curve)
            hi = std::max({hi, p.cached_tokens, p.replan_tokens});
        const std::size_t n = record.curve.size();
        auto px = [&](std::size_t i) { return n == 1 ? f.x0() : f.x0() + (f.x1() - f.x0()) * i / (n - 1.0); };
        auto py = [&](long v) { return f.y0() - static_cast<double>(v) / hi * (f.y0() - f.y1()); };
        const char* colors[2] = {"#1f77b4", "#ff7f0e"};
        for (int series = 0; series < 2; ++series) {
            os << "<polyline class=\"" << (series == 0 ? "cached" : "replan") << "\" fill=\"none\" stroke=\""
               << colors[series] << "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < n; ++i) {
                const long v = series == 0 ? record.curve[i].cached_tokens : record.curve[i].replan_tokens;
                os << (i ? " " : "") << fixed(px(i), 1) << "," << fixed(py(v), 1);
            }
            os << "\"/>\n";
        }
        for (std::size_t i = 0; i < n; ++i)
            os << label(px(i), f.y0() + 14, std::to_string(record.curve[i].disruptions));
        os << label(f.x1(), f.y1() + 10, "cached pack", "end");
        os << label(f.x1(), f.y1() + 24, "home replanning", "end");
    }
    os << "</svg>\n";
    return os.str();
}

std::vector<std::string> emit_report(const ReportInput& input, const std::string& dir)
{
    if (input.methods.empty() && input.sweep.empty())
        throw IoError("nothing to report");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create " + dir + ": " + ec.message());
    const std::filesystem::path root(dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file(root / name, content);
        written.push_back((root / name).string());
    };
    emit("results.json", to_json(input).dump(2) + "\n");
    if (!input.methods.empty()) {
        emit("metrics.csv", metrics_csv(input.methods));
        emit("reliability.svg", svg_reliability(input.methods));
    }
    if (!input.sweep.empty()) {
        emit("sweep.csv", metrics_csv(input.sweep));
        emit("steps_vs_k.svg", svg_steps_vs_k(input.sweep));
    }
    if (input.amortization)
        emit("amortization.svg", svg_amortization(*input.amortization));
    return written;
}

} // namespace skypack
