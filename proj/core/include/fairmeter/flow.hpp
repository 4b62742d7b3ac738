#pragma once

#include <cstdint>
#include <vector>

#include "fairmeter/allocator.hpp"
#include "fairmeter/network.hpp"
#include "fairmeter/stats.hpp"

namespace fairmeter {

/// Workload associated with a state, w = A [mu]^-1 n.
Vec workload_of(const Network& net, const TrafficParams& params, const Vec& n);

/**
 * Heavy-traffic stationary approximation: dual variables Q_j independent
 * exponentials with rates C_j - (A rho)_j and N_i ~ rho_i sum_j A_ji Q_j.
 */
struct ApproxLaw {
    Vec rates;   // exponential rates, equal to the stability margins
    Vec mean_n;  // rho_i sum_j A_ji / rates_j
    Vec var_n;   // rho_i^2 sum_j A_ji / rates_j^2
};

ApproxLaw approx_stationary(const Network& net, const TrafficParams& params);

struct CtmcOptions {
    double burn_in = 0.2;  // fraction of events excluded from statistics
    std::vector<int> initial;  // starting counts (empty = all zero)
    int record_stride = 0;
    bool track_histograms = false;  // per-route occupancy laws
    std::size_t cache_limit = 1u << 22;
};

struct CtmcPath {
    std::vector<double> t;
    std::vector<Vec> n, w, lambda;
};

struct CtmcResult {
    Vec mean_n;  // time-weighted averages post burn-in
    Vec mean_w;
    std::vector<stats::CountHistogram> histograms;  // when tracked
    CtmcPath path;
    double total_time = 0.0;
    std::uint64_t events = 0;
    std::uint64_t cache_hits = 0, cache_misses = 0;
};

/**
 * Exact Gillespie simulation of the connection-level chain: route i gains
 * connections at rate nu_i and loses them at rate mu_i Lambda_i(n) under the
 * proportionally fair allocation, recomputed (or fetched from a state-keyed
 * cache) at every jump.
 */
CtmcResult simulate_ctmc(const Network& net, const TrafficParams& params,
                         std::uint64_t n_events, std::uint64_t seed,
                         const CtmcOptions& opts = {});

struct FluidOptions {
    int record_stride = 0;
    bool track_lyapunov = true;  // per-step F(n) - F(Delta(w(n))) monitoring
};

struct FluidResult {
    std::vector<double> t;  // recorded grid
    std::vector<Vec> n;
    std::vector<double> manifold_distance;  // |n - Delta(w(n))|_inf on the grid
    Vec terminal_n;
    double terminal_manifold_distance = 0.0;
    /// Largest one-step increase of the Lyapunov gap F(n) - F(Delta(w(n)));
    /// nonpositive means the gap was monotone along the whole trajectory.
    double max_lyapunov_increase = 0.0;
    double terminal_lyapunov_gap = 0.0;
};

/**
 * Explicit Euler integration of dn_i/dt = nu_i - mu_i Lambda_i(n) with
 * nonnegativity projection. The allocation is recomputed every step; the
 * distance to the invariant manifold uses the lift QP, so it is defined on
 * and off the workload cone.
 */
FluidResult integrate_fluid(const Network& net, const TrafficParams& params, const Vec& n0,
                            double T, double h, const FluidOptions& opts = {});

}  // namespace fairmeter
