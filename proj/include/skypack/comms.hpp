#pragma once

#include "skypack/gridworld.hpp"
#include "skypack/reasoner.hpp"
#include "skypack/tokens.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace skypack {

/// Wire cost of one token.
inline constexpr long kBitsPerToken = 32;

enum class SyncOutcome { Delivered, Infeasible, OutOfWindow };
std::string to_string(SyncOutcome outcome);

struct SyncResult {
    SyncOutcome outcome = SyncOutcome::Infeasible;
    long tokens_charged = 0;
    double rate_sampled_bps = 0.0;
};

/// Infeasible when rate <= threshold; Delivered when the pack fits in rate * interval.
SyncResult try_sync(const SerializedPack& pack, double rate_bps, double interval_s, double threshold_bps);

struct CommsLedger {
    long sync_tokens = 0;
    long uplink_tokens = 0;
    long downlink_tokens = 0;
    long exchange_count = 0;
    long outage_count = 0;
    long sync_count = 0;

    long exchange_tokens() const { return uplink_tokens + downlink_tokens; }
    long total() const { return sync_tokens + uplink_tokens + downlink_tokens; }
    CommsLedger& operator+=(const CommsLedger& other);
    friend bool operator==(const CommsLedger&, const CommsLedger&) = default;
};

nlohmann::json to_json(const CommsLedger& ledger);

using PlannerHandle = std::function<MissionPlan()>;

struct PlanDelivery {
    MissionPlan plan;
    long uplink_tokens = 0;
    long downlink_tokens = 0;
};

struct ExchangeOutage {};

using ExchangeResult = std::variant<PlanDelivery, ExchangeOutage>;

/// Uplink summary, Home replans, downlink plan. PlannerError propagates and leaves
/// the ledger untouched.
ExchangeResult replan_exchange(long summary_tokens, double backhaul_rate_bps, double threshold_bps,
    const PlannerHandle& home_planner, CommsLedger& ledger);

/// Uplink text: observation, disruptions revealed so far, and the trace records
/// since the last exchange in trace-file form.
std::string serialize_summary(const Observation& obs, const std::vector<Reveal>& reveals,
    const std::vector<StepRecord>& records);

enum class CommsEventKind { Sync, SyncFailed, Exchange, Outage };
std::string to_string(CommsEventKind kind);

struct CommsEvent {
    CommsEventKind kind = CommsEventKind::Sync;
    long clock = 0;
    double rate_bps = 0.0;
    long sync_tokens = 0;
    long uplink_tokens = 0;
    long downlink_tokens = 0;
    std::string detail;

    long tokens() const { return sync_tokens + uplink_tokens + downlink_tokens; }
};

nlohmann::json to_json(const CommsEvent& event);

/// One episode's backhaul activity: ledger plus the event log that replays it.
class CommsSession {
public:
    CommsSession(double threshold_bps, double interval_s) : threshold_bps_(threshold_bps), interval_s_(interval_s) {}

    SyncResult sync(const SerializedPack& pack, double rate_bps, long clock);
    ExchangeResult exchange(const std::string& summary, double rate_bps, long clock, const PlannerHandle& planner);

    const CommsLedger& ledger() const { return ledger_; }
    const std::vector<CommsEvent>& events() const { return events_; }

private:
    double threshold_bps_;
    double interval_s_;
    CommsLedger ledger_;
    std::vector<CommsEvent> events_;
};

/// Ledger rebuilt from an event log.
CommsLedger replay(const std::vector<CommsEvent>& events);

struct AmortizationPoint {
    int disruptions = 0;
    long cached_tokens = 0;
    long replan_tokens = 0;
};

struct AmortizationRecord {
    long cached_total = 0;
    long replan_total = 0;
    long per_exchange_tokens = 0;
    std::vector<AmortizationPoint> curve;
    std::optional<int> d_star; ///< first disruption count where cached <= replan
};

/// Cached-pack cost is one sync regardless of disruptions; replanning pays the
/// mean per-exchange cost once per disruption.
AmortizationRecord amortization_compare(const CommsLedger& cached, const CommsLedger& replan, int max_disruptions = 10);

} // namespace skypack
