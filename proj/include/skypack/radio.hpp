#pragma once

#include "skypack/grid.hpp"
#include "skypack/rng.hpp"

namespace skypack {

struct World;

/// Air-to-ground link parameters. Path loss is free space plus an NLoS excess,
/// LoS follows the elevation sigmoid 1 / (1 + a exp(-b (theta - a))).
struct LinkConfig {
    double bandwidth_hz = 10e6;
    double tx_power_dbm = 30.0;
    double carrier_hz = 2e9;
    double noise_psd_dbm_hz = -174.0;
    double nlos_excess_db = 20.0;
    double los_a = 9.61;
    double los_b = 0.16;
    double shadowing_sigma_db = 4.0;

    friend bool operator==(const LinkConfig&, const LinkConfig&) = default;
};

LinkConfig default_access_link();
LinkConfig default_backhaul_link();

/// Validates LinkConfig invariants; throws std::invalid_argument.
void validate(const LinkConfig& link);

struct Geometry {
    double distance_m = 0.0;
    double elevation_deg = 90.0;
};

Geometry geometry(double cell_size_m, double altitude_m, GridCell uav, GridCell ground);
Geometry geometry(const World& world, GridCell uav, GridCell ground);

double los_probability(const LinkConfig& link, const Geometry& g);

double free_space_path_loss_db(double distance_m, double carrier_hz);
double noise_power_dbm(const LinkConfig& link);
/// SNR of the LoS branch in dB; the NLoS branch is this minus nlos_excess_db.
double los_snr_db(const LinkConfig& link, const Geometry& g);
double shannon_rate_bps(double bandwidth_hz, double snr_db);

/// Mean rate over the LoS/NLoS mixture, no shadowing.
double expected_rate_bps(const LinkConfig& link, const Geometry& g);

/// One stochastic realization: Bernoulli LoS, Gaussian shadowing, minus snr_drop_db.
double sample_rate_bps(const LinkConfig& link, const Geometry& g, RandomStream& rng, double snr_drop_db = 0.0);

/// Strict: feasible only when the rate exceeds the threshold.
constexpr bool link_feasible(double rate_bps, double threshold_bps)
{
    return rate_bps > threshold_bps;
}

} // namespace skypack
