#include "skypack/radio.hpp"

#include "skypack/gridworld.hpp"

#include <cmath>
#include <stdexcept>

namespace skypack {

LinkConfig default_access_link()
{
    return LinkConfig{};
}

LinkConfig default_backhaul_link()
{
    LinkConfig link;
    link.bandwidth_hz = 20e6;
    link.tx_power_dbm = 33.0;
    link.carrier_hz = 28e9;
    link.nlos_excess_db = 15.0;
    link.shadowing_sigma_db = 4.0;
    return link;
}

void validate(const LinkConfig& link)
{
    if (!(link.bandwidth_hz > 0.0))
        throw std::invalid_argument("link bandwidth must be positive");
    if (!(link.carrier_hz > 0.0))
        throw std::invalid_argument("link carrier must be positive");
    if (!(link.nlos_excess_db >= 0.0))
        throw std::invalid_argument("nlos excess must be non-negative");
    if (!(link.shadowing_sigma_db >= 0.0))
        throw std::invalid_argument("shadowing sigma must be non-negative");
}

Geometry geometry(double cell_size_m, double altitude_m, GridCell uav, GridCell ground)
{
    const double dx = (uav.x - ground.x) * cell_size_m;
    const double dy = (uav.y - ground.y) * cell_size_m;
    const double horizontal = std::hypot(dx, dy);
    Geometry g;
    g.distance_m = std::sqrt(horizontal * horizontal + altitude_m * altitude_m);
    g.elevation_deg = horizontal == 0.0 ? 90.0 : std::atan(altitude_m / horizontal) * 180.0 / M_PI;
    return g;
}

Geometry geometry(const World& world, GridCell uav, GridCell ground)
{
    return geometry(world.cell_size_m, world.altitude_m, uav, ground);
}

double los_probability(const LinkConfig& link, const Geometry& g)
{
    return 1.0 / (1.0 + link.los_a * std::exp(-link.los_b * (g.elevation_deg - link.los_a)));
}

double free_space_path_loss_db(double distance_m, double carrier_hz)
{
    return 20.0 * std::log10(distance_m) + 20.0 * std::log10(carrier_hz) - 147.55;
}

double noise_power_dbm(const LinkConfig& link)
{
    return link.noise_psd_dbm_hz + 10.0 * std::log10(link.bandwidth_hz);
}

double los_snr_db(const LinkConfig& link, const Geometry& g)
{
    return link.tx_power_dbm - free_space_path_loss_db(g.distance_m, link.carrier_hz) - noise_power_dbm(link);
}

double shannon_rate_bps(double bandwidth_hz, double snr_db)
{
    if (bandwidth_hz <= 0.0)
        return 0.0;
    return bandwidth_hz * std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

double expected_rate_bps(const LinkConfig& link, const Geometry& g)
{
    if (link.bandwidth_hz <= 0.0)
        return 0.0;
    const double p = los_probability(link, g);
    const double snr = los_snr_db(link, g);
    return p * shannon_rate_bps(link.bandwidth_hz, snr)
        + (1.0 - p) * shannon_rate_bps(link.bandwidth_hz, snr - link.nlos_excess_db);
}

double sample_rate_bps(const LinkConfig& link, const Geometry& g, RandomStream& rng, double snr_drop_db)
{
    if (link.bandwidth_hz <= 0.0)
        return 0.0;
    // Draw order is fixed: LoS state, then shadowing.
    const bool los = rng.bernoulli(los_probability(link, g));
    const double shadow = link.shadowing_sigma_db > 0.0 ? rng.normal(0.0, link.shadowing_sigma_db) : 0.0;
    double snr = los_snr_db(link, g) + shadow - snr_drop_db;
    if (!los)
        snr -= link.nlos_excess_db;
    return shannon_rate_bps(link.bandwidth_hz, snr);
}

} // namespace skypack
