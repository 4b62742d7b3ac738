#pragma once

#include <cstdint>
#include <vector>

#include "fairmeter/errors.hpp"
#include "fairmeter/rng.hpp"

namespace fairmeter {

/// Service/work requirement distribution with finite second moment.
struct WorkDistribution {
    enum class Kind { Exponential, Deterministic, General };

    Kind kind = Kind::Exponential;
    double mean = 1.0;           // 1/mu
    double second_moment = 2.0;  // E S^2
    std::vector<double> xs, Fs;  // general kind: cdf table, linearly interpolated

    static WorkDistribution exponential(double mu);
    static WorkDistribution deterministic(double mean);
    static WorkDistribution general(std::vector<double> xs, std::vector<double> Fs);

    double mu() const { return 1.0 / mean; }
    /// sigma^2 = E(S^2) / E(S), the workload variance factor.
    double sigma2() const { return second_moment / mean; }
    double cdf(double x) const;
    double sample(Philox& rng) const;
};

/// G*(x) = mu * int_0^x (1 - G(z)) dz, the stationary residual-work law
/// (forward recurrence time of a renewal process with inter-event law G).
double forward_recurrence_cdf(const WorkDistribution& G, double x);

struct GeometricLaw {
    double rho = 0.0;
    double pmf(int n) const;
    double cdf(int n) const;
    double mean() const { return rho / (1.0 - rho); }
};

/// Stationary law of the M/M/1 count process, P{N = n} = (1-rho) rho^n.
GeometricLaw mm1_stationary(double rho);

/// Exponential stationary mean of the one-dimensional reflected Brownian
/// workload model, rho sigma^2 / (2 (1 - rho)).
double rbm1_stationary_mean(double rho, double sigma2);

struct QueuePath {
    std::vector<double> t;
    std::vector<double> W;  // workload
    std::vector<int> N;     // customers in system (RBM: 0)
    std::vector<double> U;  // cumulative idleness / unused capacity
};

struct QueueSimOptions {
    double burn_in = 0.2;          // fraction of the horizon dropped from statistics
    int initial_count = 0;         // customers present at t = 0 (work drawn fresh)
    int n_batches = 0;             // batch means of the count (standard errors)
    int record_stride = 0;         // keep every k-th event in the path; 0 = none
    double sample_spacing = 0.0;   // PS residual sampling interval; 0 = auto
    bool record_residual_groups = false;
};

struct QueueSimResult {
    QueuePath path;
    std::vector<double> count_pmf;  // time-weighted occupancy law (post burn-in)
    double mean_count = 0.0;
    double mean_workload = 0.0;
    double total_time = 0.0;
    std::uint64_t events = 0;
    std::vector<double> residual_samples;               // PS mode
    std::vector<std::vector<double>> residual_groups;   // per sampling epoch
    std::vector<double> batch_means;                    // when n_batches > 0
};

/**
 * Event-driven single-server queue with Poisson(nu) arrivals and exponential
 * work of rate mu at unit capacity; its count process is the M/M/1 chain.
 * Workload accounting is exact at every event.
 */
QueueSimResult simulate_mm1(double nu, double mu, std::uint64_t n_events, std::uint64_t seed,
                            const QueueSimOptions& opts = {});

/**
 * M/G/1 processor sharing: each of n in-system customers depletes at rate
 * 1/n; event-driven and exact between arrival/departure epochs. Residual
 * works are sampled on a fixed grid after burn-in.
 */
QueueSimResult simulate_mg1_ps(double nu, const WorkDistribution& G, double T,
                               std::uint64_t seed, const QueueSimOptions& opts = {});

/**
 * Reflected Brownian workload path: Euler increments of the free process
 * X with drift -(1-rho) and variance rho sigma^2, reflected by the exact
 * discrete Skorokhod map U_k = max(0, max_{j<=k} (-W_0 - X_j)).
 */
QueuePath rbm1_path(double rho, double sigma2, double T, double h, std::uint64_t seed,
                    double W0 = 0.0, int record_stride = 1);

/// Streaming time-average of the reflected path (post burn-in), no storage.
double rbm1_time_average(double rho, double sigma2, double T, double h, std::uint64_t seed,
                         double W0 = 0.0, double burn_in = 0.2);

/// Heavy-traffic rescaling W_hat(t) = (1-rho) W(t / (1-rho)^2) applied to a path.
QueuePath scale_workload(const QueuePath& path, double rho);

}  // namespace fairmeter
