#include "skypack/comms.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace skypack {

std::string to_string(SyncOutcome outcome)
{
    switch (outcome) {
    case SyncOutcome::Delivered: return "delivered";
    case SyncOutcome::Infeasible: return "infeasible";
    case SyncOutcome::OutOfWindow: return "out_of_window";
    }
    return "infeasible";
}

SyncResult try_sync(const SerializedPack& pack, double rate_bps, double interval_s, double threshold_bps)
{
    if (!(interval_s > 0.0))
        throw std::invalid_argument("sync interval must be positive");
    SyncResult r;
    r.rate_sampled_bps = rate_bps;
    if (!link_feasible(rate_bps, threshold_bps)) {
        r.outcome = SyncOutcome::Infeasible;
        return r;
    }
    const double bits = static_cast<double>(pack.token_count) * kBitsPerToken;
    if (bits <= rate_bps * interval_s) {
        r.outcome = SyncOutcome::Delivered;
        r.tokens_charged = pack.token_count;
    } else {
        r.outcome = SyncOutcome::OutOfWindow;
    }
    return r;
}

CommsLedger& CommsLedger::operator+=(const CommsLedger& o)
{
    sync_tokens += o.sync_tokens;
    uplink_tokens += o.uplink_tokens;
    downlink_tokens += o.downlink_tokens;
    exchange_count += o.exchange_count;
    outage_count += o.outage_count;
    sync_count += o.sync_count;
    return *this;
}

nlohmann::json to_json(const CommsLedger& l)
{
    return {{"sync_tokens", l.sync_tokens}, {"uplink_tokens", l.uplink_tokens}, {"downlink_tokens", l.downlink_tokens},
        {"exchange_count", l.exchange_count}, {"outage_count", l.outage_count}, {"sync_count", l.sync_count}};
}

ExchangeResult replan_exchange(long summary_tokens, double backhaul_rate_bps, double threshold_bps,
    const PlannerHandle& home_planner, CommsLedger& ledger)
{
    if (summary_tokens <= 0)
        throw std::invalid_argument("summary must carry at least one token");
    if (!link_feasible(backhaul_rate_bps, threshold_bps)) {
        ++ledger.outage_count;
        return ExchangeOutage{};
    }
    PlanDelivery d;
    d.plan = home_planner();
    d.uplink_tokens = summary_tokens;
    d.downlink_tokens = count_tokens(serialize_plan(d.plan));
    ledger.uplink_tokens += d.uplink_tokens;
    ledger.downlink_tokens += d.downlink_tokens;
    ++ledger.exchange_count;
    return d;
}

std::string serialize_summary(const Observation& obs, const std::vector<Reveal>& reveals,
    const std::vector<StepRecord>& records)
{
    std::ostringstream os;
    os << "summary clock=" << obs.clock << " mission_clock=" << obs.absolute_clock() << " uav=" << to_string(obs.uav)
       << " budget=" << obs.remaining_budget << " last=" << to_string(obs.last_outcome) << "\n";
    os << "remaining";
    for (const auto& c : obs.remaining)
        os << " " << c.id << "@" << to_string(c.cell);
    os << "\n";
    for (const auto& f : obs.failed)
        os << "failed cluster=" << f.cluster << " at=" << to_string(f.waypoint) << "\n";
    for (const auto& r : reveals) {
        os << "disruption " << to_string(r.disruption.kind) << " cluster=" << r.disruption.cluster;
        if (r.disruption.kind == DisruptionKind::ClusterDrift)
            os << " offset=" << to_string(r.disruption.offset);
        else
            os << " drop_db=" << r.disruption.snr_drop_db;
        os << " clock=" << r.clock << " seen_from=" << to_string(r.uav) << "\n";
    }
    for (const auto& r : records)
        os << step_json_line(r) << "\n";
    os << "end\n";
    return os.str();
}

std::string to_string(CommsEventKind kind)
{
    switch (kind) {
    case CommsEventKind::Sync: return "sync";
    case CommsEventKind::SyncFailed: return "sync_failed";
    case CommsEventKind::Exchange: return "exchange";
    case CommsEventKind::Outage: return "outage";
    }
    return "sync";
}

nlohmann::json to_json(const CommsEvent& e)
{
    return {{"event", to_string(e.kind)}, {"clock", e.clock}, {"rate_bps", e.rate_bps}, {"sync_tokens", e.sync_tokens},
        {"uplink_tokens", e.uplink_tokens}, {"downlink_tokens", e.downlink_tokens}, {"detail", e.detail}};
}

SyncResult CommsSession::sync(const SerializedPack& pack, double rate_bps, long clock)
{
    const SyncResult r = try_sync(pack, rate_bps, interval_s_, threshold_bps_);
    CommsEvent e;
    e.clock = clock;
    e.rate_bps = rate_bps;
    e.detail = to_string(r.outcome);
    if (r.outcome == SyncOutcome::Delivered) {
        e.kind = CommsEventKind::Sync;
        e.sync_tokens = r.tokens_charged;
        ledger_.sync_tokens += r.tokens_charged;
        ++ledger_.sync_count;
    } else {
        e.kind = CommsEventKind::SyncFailed;
    }
    events_.push_back(e);
    return r;
}

ExchangeResult CommsSession::exchange(const std::string& summary, double rate_bps, long clock, const PlannerHandle& planner)
{
    CommsEvent e;
    e.clock = clock;
    e.rate_bps = rate_bps;
    ExchangeResult r;
    try {
        r = replan_exchange(count_tokens(summary), rate_bps, threshold_bps_, planner, ledger_);
    } catch (const PlannerError& err) {
        ++ledger_.outage_count;
        e.kind = CommsEventKind::Outage;
        e.detail = std::string("planner error: ") + err.what();
        events_.push_back(e);
        return ExchangeOutage{};
    }
    if (const auto* d = std::get_if<PlanDelivery>(&r)) {
        e.kind = CommsEventKind::Exchange;
        e.uplink_tokens = d->uplink_tokens;
        e.downlink_tokens = d->downlink_tokens;
        e.detail = std::to_string(d->plan.legs.size()) + " legs";
    } else {
        e.kind = CommsEventKind::Outage;
        e.detail = "backhaul below threshold";
    }
    events_.push_back(e);
    return r;
}

CommsLedger replay(const std::vector<CommsEvent>& events)
{
    CommsLedger l;
    for (const auto& e : events) {
        l.sync_tokens += e.sync_tokens;
        l.uplink_tokens += e.uplink_tokens;
        l.downlink_tokens += e.downlink_tokens;
        switch (e.kind) {
        case CommsEventKind::Sync: ++l.sync_count; break;
        case CommsEventKind::Exchange: ++l.exchange_count; break;
        case CommsEventKind::Outage: ++l.outage_count; break;
        case CommsEventKind::SyncFailed: break;
        }
    }
    return l;
}

AmortizationRecord amortization_compare(const CommsLedger& cached, const CommsLedger& replan, int max_disruptions)
{
    AmortizationRecord r;
    r.cached_total = cached.total();
    r.replan_total = replan.total();
    r.per_exchange_tokens = replan.exchange_count > 0
        ? static_cast<long>(std::llround(static_cast<double>(replan.exchange_tokens()) / replan.exchange_count))
        : 0;
    for (int d = 0; d <= max_disruptions; ++d) {
        AmortizationPoint p{d, cached.sync_tokens + cached.exchange_tokens(), d * r.per_exchange_tokens};
        if (!r.d_star && p.cached_tokens <= p.replan_tokens)
            r.d_star = d;
        r.curve.push_back(p);
    }
    return r;
}

} // namespace skypack
