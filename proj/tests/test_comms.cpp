#include "skypack/comms.hpp"
#include "skypack/harness.hpp"

#include <doctest.h>

using namespace skypack;

namespace {

SerializedPack pack_of(long tokens)
{
    return {3, std::string(static_cast<std::size_t>(tokens) * 4, 'x'), tokens};
}

MissionPlan small_plan()
{
    MissionPlan p;
    p.created_clock = 4;
    p.legs.push_back({0, {4, 4}, {1, 1}, 4, {{4, 3}, {3, 3}}});
    p.backhaul_checkpoints = {5};
    return p;
}

} // namespace

TEST_CASE("try_sync gate and window")
{
    const SyncResult at = try_sync(pack_of(100), 5e6, 1.0, 5e6);
    CHECK(at.outcome == SyncOutcome::Infeasible);
    CHECK(at.tokens_charged == 0);
    CHECK(at.rate_sampled_bps == 5e6);

    const SyncResult ok = try_sync(pack_of(1000), 10e6, 1.0, 5e6);
    CHECK(ok.outcome == SyncOutcome::Delivered);
    CHECK(ok.tokens_charged == 1000);

    const SyncResult big = try_sync(pack_of(1000000), 6e6, 1.0, 5e6);
    CHECK(big.outcome == SyncOutcome::OutOfWindow);
    CHECK(big.tokens_charged == 0);

    // 32 bits per token: 200000 tokens is exactly 6.4e6 bits.
    CHECK(try_sync(pack_of(200000), 6.4e6, 1.0, 5e6).outcome == SyncOutcome::Delivered);
    CHECK(try_sync(pack_of(200001), 6.4e6, 1.0, 5e6).outcome == SyncOutcome::OutOfWindow);
    CHECK(try_sync(pack_of(200001), 6.4e6, 2.0, 5e6).outcome == SyncOutcome::Delivered);

    CHECK_THROWS_AS(try_sync(pack_of(1), 10e6, 0.0, 5e6), std::invalid_argument);
}

TEST_CASE("gate strictness: nothing is charged at or below the threshold")
{
    for (double rate = 0.0; rate <= 5e6; rate += 2.5e5) {
        CommsSession s(5e6, 1.0);
        s.sync(pack_of(10), rate, 0);
        s.exchange("summary text", rate, 1, [] { return small_plan(); });
        CHECK(s.ledger().total() == 0);
        CHECK(s.ledger().sync_count == 0);
        CHECK(s.ledger().exchange_count == 0);
        CHECK(s.ledger().outage_count == 1);
    }
}

TEST_CASE("replan_exchange")
{
    CommsLedger l;
    const ExchangeResult r = replan_exchange(40, 10e6, 5e6, [] { return small_plan(); }, l);
    const auto* d = std::get_if<PlanDelivery>(&r);
    REQUIRE(d);
    CHECK(d->plan == small_plan());
    CHECK(d->uplink_tokens == 40);
    CHECK(d->downlink_tokens == count_tokens(serialize_plan(small_plan())));
    CHECK(l.uplink_tokens == 40);
    CHECK(l.downlink_tokens == d->downlink_tokens);
    CHECK(l.exchange_count == 1);
    CHECK(l.exchange_tokens() == 40 + d->downlink_tokens);

    CommsLedger down;
    bool called = false;
    const ExchangeResult o = replan_exchange(40, 5e6, 5e6, [&] { called = true; return small_plan(); }, down);
    CHECK(std::holds_alternative<ExchangeOutage>(o));
    CHECK_FALSE(called);
    CHECK(down.outage_count == 1);
    CHECK(down.total() == 0);

    CommsLedger twice;
    replan_exchange(40, 10e6, 5e6, [] { return small_plan(); }, twice);
    replan_exchange(40, 10e6, 5e6, [] { return small_plan(); }, twice);
    CHECK(twice.exchange_count == 2);
    CHECK(twice.total() == 2 * l.total());

    CommsLedger err;
    CHECK_THROWS_AS(replan_exchange(40, 10e6, 5e6, []() -> MissionPlan { throw PlannerError("x"); }, err), PlannerError);
    CHECK(err == CommsLedger{});
    CHECK_THROWS_AS(replan_exchange(0, 10e6, 5e6, [] { return small_plan(); }, err), std::invalid_argument);
}

TEST_CASE("session events replay to the ledger")
{
    CommsSession s(5e6, 1.0);
    s.sync(pack_of(50), 4e6, 0);
    s.sync(pack_of(50), 8e6, 1);
    s.exchange("uplink summary", 9e6, 2, [] { return small_plan(); });
    s.exchange("uplink summary", 1e6, 3, [] { return small_plan(); });
    s.exchange("uplink summary", 9e6, 4, []() -> MissionPlan { throw PlannerError("no leg"); });
    REQUIRE(s.events().size() == 5);
    CHECK(s.events()[0].kind == CommsEventKind::SyncFailed);
    CHECK(s.events()[1].kind == CommsEventKind::Sync);
    CHECK(s.events()[2].kind == CommsEventKind::Exchange);
    CHECK(s.events()[3].kind == CommsEventKind::Outage);
    CHECK(s.events()[4].kind == CommsEventKind::Outage);
    CHECK(replay(s.events()) == s.ledger());
    long sum = 0;
    for (const auto& e : s.events())
        sum += e.tokens();
    CHECK(sum == s.ledger().total());
    CHECK(s.ledger().outage_count == 2);
    CHECK(s.ledger().sync_tokens == 50);
    CHECK(to_json(s.events()[2]).at("event") == "exchange");
}

TEST_CASE("ledger conservation over real episodes")
{
    const Experiment e = make_experiment(default_mission_config());
    for (const MethodSpec& m : {MethodSpec::with_k(3), MethodSpec::home_replan(), MethodSpec::with_k(5)}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const EpisodeResult r = run_episode(e, m, seed);
            CHECK(replay(r.comms_events) == r.ledger);
            // Cache semantics: at most one sync per episode.
            CHECK(r.ledger.sync_count <= 1);
        }
    }
}

TEST_CASE("amortization")
{
    CommsLedger cached;
    cached.sync_tokens = 400;
    cached.sync_count = 1;
    CommsLedger none;
    const AmortizationRecord zero = amortization_compare(cached, none, 5);
    CHECK(zero.curve[0].disruptions == 0);
    CHECK(zero.curve[0].cached_tokens == 400);
    CHECK(zero.curve[0].replan_tokens == 0);
    CHECK(zero.curve[0].cached_tokens > zero.curve[0].replan_tokens);
    CHECK_FALSE(zero.d_star);

    CommsLedger replan;
    replan.uplink_tokens = 600;
    replan.downlink_tokens = 400;
    replan.exchange_count = 2;
    const AmortizationRecord r = amortization_compare(cached, replan, 10);
    CHECK(r.per_exchange_tokens == 500);
    REQUIRE(r.d_star);
    CHECK(*r.d_star == 1);
    CHECK(r.curve.size() == 11);
    long prev_gap = r.curve[0].cached_tokens - r.curve[0].replan_tokens;
    for (const auto& p : r.curve) {
        if (p.disruptions >= 1)
            CHECK(p.cached_tokens <= p.replan_tokens);
        const long gap = p.cached_tokens - p.replan_tokens;
        CHECK(gap <= prev_gap);
        prev_gap = gap;
    }

    // A pack larger than one exchange needs several events.
    CommsLedger heavy;
    heavy.sync_tokens = 1200;
    CHECK(*amortization_compare(heavy, replan, 10).d_star == 3);
}

TEST_CASE("uplink summary carries the disruption and the trace since the last exchange")
{
    const World w = build_world(default_mission_config());
    EpisodeState s = initial_state(w, 3, {});
    Observation obs = observe(w, s, true);
    obs.failed.insert({2, {1, 6}});
    Reveal rv{{DisruptionKind::ClusterDrift, 1, {0, 1}, 0.0}, 9, {5, 1}};
    StepRecord step;
    step.clock = 9;
    step.cell = {5, 1};
    step.action = Action::Move;
    step.outcome = Outcome::Moved;
    const std::string text = serialize_summary(obs, {rv}, {step});
    CHECK(text.find("failed cluster=2 at=1,6") != std::string::npos);
    CHECK(text.find("disruption cluster_drift cluster=1 offset=0,1") != std::string::npos);
    CHECK(text.find(step_json_line(step)) != std::string::npos);
    CHECK(text == serialize_summary(obs, {rv}, {step}));
    CHECK(count_tokens(text) > count_tokens(serialize_summary(obs, {}, {})));
}
