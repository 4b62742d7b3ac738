#pragma once

#include <cstdint>
#include <vector>

#include "fairmeter/motorway.hpp"
#include "fairmeter/network.hpp"
#include "fairmeter/stats.hpp"

namespace fairmeter {

/**
 * Admissible lines per traffic source for the parallel-roads example: source
 * 1 must use line 1, source 2 may use lines 1-2, source 3 lines 1-3, source
 * 4 only the common road. Ties in delay go to the lowest line index.
 */
struct ChoiceModel {
    std::vector<std::vector<int>> choice_sets;

    static ChoiceModel parallel4();
};

/// Line with the smallest delay estimate in the choice set (lowest index on
/// ties).
int choose_line(const std::vector<int>& choice_set, const Vec& d);

struct EnlargedStabilityReport {
    Vec physical_margins;  // C - A rho
    Vec virtual_margins;   // Cbar - Abar rho
    bool capcon_stable = false;
    bool enlarged_stable = false;
};

/// Stability of the parallel-roads system with route choices: the virtual
/// (cumulative) margins decide it, and configurations stable only by virtue
/// of the choices show up as enlarged_stable && !capcon_stable.
EnlargedStabilityReport enlarged_stability(const Vec& rho, const Vec& C);

struct VirtualLaw {
    Vec zeta;        // exponential rates of the virtual duals
    Vec mean_delay;  // E D_i = sum_{j >= i} 1 / zeta_j
    Vec var_delay;
    Vec mean_m;      // rho_i * mean_delay_i
};

/// zeta_j = (2 / sigma^2) (Cbar_j - (Abar rho)_j) for the four virtual
/// resources; delays stack the duals from a line upward, D_i = sum_{j>=i} Q_j.
VirtualLaw zeta_params(const Vec& rho, const Vec& C, double sigma2);

struct RouteChoiceConfig {
    double T = 2e4;
    double h = 1e-3;
    std::uint64_t seed = 1;
    double burn_in = 0.2;
    int replications = 1;
    int record_stride = 0;
    double sample_spacing = 0.0;
    bool record_arrivals = false;  // poisson mode: per-arrival chosen-line log
};

struct ArrivalChoice {
    double t;
    int source;
    int line;
};

struct RouteChoiceResult {
    Vec mean_m;
    Vec mean_d;             // time-average physical delay estimates per line
    Vec virtual_dual_mean;  // diagnostic: (Abar [rho] Abar')^-1 avg(Abar m)
    stats::TrendReport total_m_trend;
    std::vector<std::uint64_t> chosen_counts;  // per line
    std::vector<ArrivalChoice> arrivals;
    MotorwayPath path;
    double final_total_m = 0.0;
};

/**
 * Simulate the parallel-roads system under proportionally fair metering of
 * the physical network, with each source assigning its traffic to the
 * admissible line of least current delay estimate (d_i = q_i + q_4). The
 * metering policy itself never sees the choice sets.
 */
RouteChoiceResult simulate_route_choice(const Vec& rho, const Vec& C, double sigma2,
                                        ArrivalMode mode, const RouteChoiceConfig& cfg);

}  // namespace fairmeter
