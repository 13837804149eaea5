#include "skypack/gridworld.hpp"
#include "skypack/radio.hpp"

#include <doctest.h>

#include <cmath>

using namespace skypack;

// Values frozen from tests/oracles/link_budget.py.
namespace oracle {
constexpr double adj_distance = 509.9019513592785;
constexpr double adj_elevation = 11.309932474020215;
constexpr double corner_horizontal = 2828.42712474619;
constexpr double corner_distance = 2830.1943396169813;
constexpr double corner_elevation = 2.02486829727734;
constexpr double plos_90 = 0.999975074537903;
constexpr double plos_2 = 0.02987496220513697;
constexpr double plos_at_a = 0.09425070688030161;
constexpr double access_over_rate = 184463058.71439144;
constexpr double access_over_snr = 55.529400086720386;
constexpr double access_over_fspl = 78.47059991327961;
constexpr double bh_corner_25_rate = 1225435.9107573791;
constexpr double bh_corner_snr = 3.5602142556734293;
constexpr double bh_corner_fspl = 130.42948578768676;
constexpr double bh_corner_plos = 0.029990497236350323;
constexpr double bh_corner_los_only = 34185608.323955745;
constexpr double bh_corner_15_rate = 2965510.6869588196;
constexpr double snr5_rate = 20573732.086067952;
constexpr double far_feasible_15 = 0.1718304337374871;
constexpr double adj_feasible_15 = 0.9966568051352357;
} // namespace oracle

namespace {

constexpr double kRel = 1e-6;

doctest::Approx rel(double v)
{
    return doctest::Approx(v).epsilon(kRel);
}

LinkConfig backhaul_25()
{
    LinkConfig l = default_backhaul_link();
    l.nlos_excess_db = 25.0;
    return l;
}

} // namespace

TEST_CASE("geometry")
{
    const Geometry over = geometry(500.0, 100.0, {2, 2}, {2, 2});
    CHECK(over.distance_m == doctest::Approx(100.0));
    CHECK(over.elevation_deg == 90.0);

    const Geometry adj = geometry(500.0, 100.0, {0, 0}, {1, 0});
    CHECK(adj.distance_m == rel(oracle::adj_distance));
    CHECK(adj.elevation_deg == rel(oracle::adj_elevation));

    const Geometry corner = geometry(500.0, 100.0, {0, 0}, {4, 4});
    CHECK(std::sqrt(corner.distance_m * corner.distance_m - 100.0 * 100.0) == rel(oracle::corner_horizontal));
    CHECK(corner.distance_m == rel(oracle::corner_distance));
    CHECK(corner.elevation_deg == rel(oracle::corner_elevation));
}

TEST_CASE("LoS probability")
{
    const LinkConfig l = default_access_link();
    CHECK(los_probability(l, {100.0, 90.0}) == rel(oracle::plos_90));
    CHECK(los_probability(l, {100.0, 2.0}) == rel(oracle::plos_2));
    CHECK(los_probability(l, {100.0, l.los_a}) == rel(1.0 / (1.0 + l.los_a)));
    CHECK(los_probability(l, {100.0, l.los_a}) == rel(oracle::plos_at_a));

    double prev = 0.0;
    for (double el = 0.1; el <= 90.0; el += 0.1) {
        const double p = los_probability(l, {100.0, el});
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("access link budget over the cluster")
{
    const LinkConfig l = default_access_link();
    const Geometry g{100.0, 90.0};
    CHECK(free_space_path_loss_db(100.0, l.carrier_hz) == rel(oracle::access_over_fspl));
    CHECK(los_snr_db(l, g) == rel(oracle::access_over_snr));
    CHECK(expected_rate_bps(l, g) == rel(oracle::access_over_rate));

    LinkConfig zero = l;
    zero.bandwidth_hz = 0.0;
    CHECK(expected_rate_bps(zero, g) == 0.0);
}

TEST_CASE("backhaul link budget at the far corner")
{
    const Geometry g = geometry(500.0, 100.0, {0, 0}, {4, 4});
    const LinkConfig l25 = backhaul_25();
    CHECK(free_space_path_loss_db(g.distance_m, l25.carrier_hz) == rel(oracle::bh_corner_fspl));
    CHECK(los_snr_db(l25, g) == rel(oracle::bh_corner_snr));
    CHECK(los_probability(l25, g) == rel(oracle::bh_corner_plos));
    CHECK(expected_rate_bps(l25, g) == rel(oracle::bh_corner_25_rate));
    CHECK(shannon_rate_bps(l25.bandwidth_hz, los_snr_db(l25, g)) == rel(oracle::bh_corner_los_only));
    CHECK(expected_rate_bps(l25, g) < 0.1 * oracle::bh_corner_los_only);

    CHECK(expected_rate_bps(default_backhaul_link(), g) == rel(oracle::bh_corner_15_rate));
}

TEST_CASE("sample_rate_bps")
{
    LinkConfig l = default_access_link();
    l.shadowing_sigma_db = 0.0;
    l.los_a = 1e-9; // p_los is 1 to double precision
    const Geometry g = geometry(500.0, 100.0, {0, 0}, {1, 0});
    RandomStream rng(1);
    CHECK(sample_rate_bps(l, g, rng) == rel(shannon_rate_bps(l.bandwidth_hz, los_snr_db(l, g))));

    // 30 dB LoS SNR minus a 25 dB drop lands at 5 dB.
    LinkConfig l30 = l;
    l30.tx_power_dbm += 30.0 - los_snr_db(l, g);
    CHECK(los_snr_db(l30, g) == doctest::Approx(30.0));
    CHECK(sample_rate_bps(l30, g, rng, 25.0) == rel(oracle::snr5_rate));

    const LinkConfig d = default_access_link();
    RandomStream a(77), b(77);
    for (int i = 0; i < 100; ++i)
        CHECK(sample_rate_bps(d, g, a, 3.0) == sample_rate_bps(d, g, b, 3.0));
}

TEST_CASE("empirical mean converges to the branch mixture without shadowing")
{
    LinkConfig l = default_backhaul_link();
    l.shadowing_sigma_db = 0.0;
    for (const Geometry& g : {geometry(500.0, 100.0, {0, 0}, {4, 4}), geometry(500.0, 100.0, {0, 0}, {1, 1})}) {
        RandomStream rng(2024);
        const int n = 200000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i)
            sum += sample_rate_bps(l, g, rng);
        const double p = los_probability(l, g);
        const double s = los_snr_db(l, g);
        const double mixture = p * shannon_rate_bps(l.bandwidth_hz, s)
            + (1.0 - p) * shannon_rate_bps(l.bandwidth_hz, s - l.nlos_excess_db);
        CHECK(std::abs(sum / n - mixture) / mixture < 0.01);
        CHECK(mixture == rel(expected_rate_bps(l, g)));
    }
}

TEST_CASE("rate monotonicity")
{
    LinkConfig l = default_access_link();
    double prev = 1e300;
    for (double d = 100.0; d < 5000.0; d += 50.0) {
        const double r = shannon_rate_bps(l.bandwidth_hz, los_snr_db(l, {d, 45.0}));
        CHECK(r < prev);
        prev = r;
    }
    const Geometry g{800.0, 10.0};
    double last = 0.0;
    for (double tx = 0.0; tx <= 40.0; tx += 2.0) {
        l.tx_power_dbm = tx;
        const double r = expected_rate_bps(l, g);
        CHECK(r >= last);
        last = r;
    }
    last = 0.0;
    l = default_access_link();
    for (double bw = 1e6; bw <= 40e6; bw += 1e6) {
        l.bandwidth_hz = bw;
        const double r = expected_rate_bps(l, g);
        CHECK(r >= last);
        last = r;
    }
}

TEST_CASE("backhaul intermittency calibration under the default link")
{
    const World w = build_world(default_mission_config());
    const LinkConfig l = w.backhaul_link;
    auto feasible_fraction = [&](GridCell uav, std::uint64_t seed) {
        RandomStream rng(seed);
        const Geometry g = geometry(w, uav, w.home);
        const int n = 100000;
        int ok = 0;
        for (int i = 0; i < n; ++i)
            ok += link_feasible(sample_rate_bps(l, g, rng), w.backhaul_threshold_bps) ? 1 : 0;
        return static_cast<double>(ok) / n;
    };
    const double far = feasible_fraction({0, 0}, 1);
    const double adj = feasible_fraction({4, 5}, 2);
    CHECK(1.0 - far >= 0.5);
    CHECK(adj >= 0.95);
    // Monte Carlo against the analytic oracle, 4 sigma of a binomial at n = 1e5.
    CHECK(std::abs(far - oracle::far_feasible_15) < 0.005);
    CHECK(std::abs(adj - oracle::adj_feasible_15) < 0.002);
}

TEST_CASE("link_feasible is strict")
{
    CHECK_FALSE(link_feasible(8.0e6, 8e6));
    CHECK(link_feasible(8.000001e6, 8e6));
    CHECK(link_feasible(5.1e6, 5e6));
    CHECK_FALSE(link_feasible(5e6, 5e6));
}

TEST_CASE("link validation")
{
    LinkConfig l;
    l.bandwidth_hz = 0.0;
    CHECK_THROWS_AS(validate(l), std::invalid_argument);
    l = LinkConfig{};
    l.nlos_excess_db = -1.0;
    CHECK_THROWS_AS(validate(l), std::invalid_argument);
    l = LinkConfig{};
    l.shadowing_sigma_db = -0.1;
    CHECK_THROWS_AS(validate(l), std::invalid_argument);
    CHECK_NOTHROW(validate(default_backhaul_link()));
}
