#pragma once

#include <cstdint>
#include <vector>

#include "fairmeter/allocator.hpp"
#include "fairmeter/network.hpp"
#include "fairmeter/rng.hpp"
#include "fairmeter/stats.hpp"

namespace fairmeter {

enum class PolicyKind { ProportionalFair, UpstreamPriority, DownstreamPriority };
enum class ArrivalMode { Brownian, PoissonJobs };

/// Work increments over one step: rho_i h + sqrt(rho_i sigma^2 h) xi_i with
/// independent standard normals; increments may be negative.
Vec brownian_inflows(const TrafficParams& params, double h, Philox& rng);

/**
 * Proportionally fair metering rates, duals and delay estimates for line
 * sizes m. Dispatches to the exact linear / parallel-roads solvers when the
 * topology allows, otherwise to the general dual solver.
 */
PfRates pf_rates(const Network& net, const Vec& m);

/**
 * Upstream-priority rates on a linear network: the greedy cascade from the
 * most upstream line down, each line taking all capacity left by the lines
 * above it. Empty lines are limited to the instantaneous inflow allowance
 * (work per unit time available to pass straight through).
 */
Vec upstream_priority_rates(const Network& net, const Vec& m, const Vec& inflow_allowance);

/// Downstream-priority rates: the lowest-indexed nonempty line is served at
/// full section capacity, everything else waits.
Vec downstream_priority_rates(const Network& net, const Vec& m);

/**
 * Stationary law of the Brownian motorway model under proportional fairness:
 * dual variables independent exponentials with rates
 * zeta_j = (2 / sigma^2) (C_j - (A rho)_j), line sizes M_i = rho_i (A'Q)_i
 * and nominal delays D = A'Q.
 */
struct StationaryLaw {
    Vec zeta;
    Vec mean_q;   // 1 / zeta
    Vec mean_d;   // A' mean_q
    Vec var_d;    // sum_j A_ji / zeta_j^2
    Vec mean_m;   // rho .* mean_d
    Vec var_m;    // rho^2 .* var_d
};

StationaryLaw stationary_law(const Network& net, const TrafficParams& params);

/// Monte-Carlo quantiles of the nominal delays; row r = probs, one column
/// per line.
Mat delay_quantiles(const StationaryLaw& law, const Network& net,
                    const std::vector<double>& probs, int n_samples, std::uint64_t seed);

/// Nominal delays for given duals, D = A'q.
Vec nominal_delays(const Network& net, const Vec& q);

/// Remove one resource row (an unconstrained section); the result is a
/// rectangular network handled by least-squares cone membership downstream.
Network collapsed_network(const Network& net, int resource);

/// Workload cone of the strict upstream-priority strategy:
/// 0 <= w_J <= ... <= w_1.
bool first_strategy_cone_check(const Vec& w, double tol = 1e-12);

struct MotorwaySimConfig {
    Vec initial_m;  // starting line sizes (empty = zero)
    double T = 1e4;
    double h = 1e-3;
    std::uint64_t seed = 1;
    double burn_in = 0.2;
    int replications = 1;
    int threads = 0;              // 0 = one per replication up to hardware
    int record_stride = 0;        // path recording (replication 0 only)
    double sample_spacing = 0.0;  // dual sampling interval; 0 = T / 2000
    bool record_events = false;   // poisson mode: keep per-arrival totals
};

struct MotorwayPath {
    std::vector<double> t;
    std::vector<Vec> m, lambda, q, d, unused;
};

struct MotorwayRepStats {
    Vec mean_m, mean_d, mean_q;
    Vec utilization;  // time-average resource usage (A Lambda)_j / C_j
    std::vector<std::vector<double>> q_samples;  // per resource, post burn-in
    std::vector<double> event_t, event_total_m;  // poisson mode, at arrivals
    stats::TrendReport total_m_trend;
    double final_total_m = 0.0;
    double max_capacity_violation = 0.0;  // max over steps of (A Lambda - C)+
};

struct MotorwayResult {
    std::vector<MotorwayRepStats> reps;
    Vec mean_m, mean_d, mean_q, utilization;  // averaged across replications
    MotorwayPath path;
};

/**
 * Simulate the metered motorway. Brownian mode advances line sizes by
 * m <- max(0, m + dE - Lambda(m) h); poisson mode is event-driven with
 * unit-work jobs arriving at rates rho_i, rates frozen between events and
 * line-empty times treated as events. Replications use independent Philox
 * streams derived from the seed and are merged in replication order.
 */
MotorwayResult simulate_motorway(const Network& net, const TrafficParams& params,
                                 PolicyKind policy, ArrivalMode mode,
                                 const MotorwaySimConfig& cfg);

}  // namespace fairmeter
