#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "fairmeter/errors.hpp"

namespace fairmeter {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Structural tag used to pick exact fast paths in the allocator; General is
/// always a correct fallback.
enum class Topology { General, Linear, Tree, Parallel4 };

/**
 * A capacity-constrained network: J resources, I routes, a 0/1 resource-route
 * incidence matrix A (full row rank, no empty route) and positive capacities.
 * Immutable after validation; safe to share across threads read-only.
 */
struct Network {
    Mat A;  // J x I, entries in {0,1}
    Vec C;  // J, strictly positive
    Topology topology = Topology::General;

    int num_resources() const { return static_cast<int>(A.rows()); }
    int num_routes() const { return static_cast<int>(A.cols()); }

    /// True when A contains all J identity columns (each resource serves at
    /// least one single-resource route). Needed by the convergence theory,
    /// not by any computation here; recorded for reporting only.
    bool has_local_traffic_columns() const;
};

struct TrafficParams {
    Vec nu;         // arrival rates, >= 0
    Vec mu;         // inverse mean work per arrival, > 0
    Vec rho;        // loads, rho_i = nu_i / mu_i
    double sigma2 = 1.0;  // inflow variance factor (motorway model)
};

/// Build params from arrival and size rates; rho is derived.
TrafficParams make_traffic(Vec nu, Vec mu, double sigma2 = 1.0);

/// Motorway-style params given loads directly (unit work, nu = rho, mu = 1).
TrafficParams make_traffic_from_loads(Vec rho, double sigma2 = 1.0);

struct StabilityReport {
    Vec margins;   // C - A rho
    bool stable = false;
    std::optional<double> harmonic_load;  // sum_j rho_j / C_j, linear networks
};

/**
 * Validate an incidence matrix and capacity vector.
 *
 * Throws EmptyRoute, NonpositiveCapacity or RankDeficient. The rank test is
 * exact (fraction-free elimination on the 0/1 entries) for networks small
 * enough for 64-bit intermediates, with a floating-point fallback at pivot
 * tolerance 1e-10.
 */
Network validate(const Mat& A, const Vec& C);

/// margins = C - A rho; stable iff all margins positive.
StabilityReport stability_margin(const Network& net, const TrafficParams& params);

/**
 * The linear (in-line road) network with J = I = C.size(): route i enters at
 * section i and traverses sections i, i-1, ..., 1, so A is upper-triangular
 * ones. Requires C strictly decreasing and positive.
 */
Network linear_network(const Vec& C);

/// The fixed six-section tree preset (root section 1, branches 2-3 and 4-6).
Network tree6_network(const Vec& C);

/**
 * General in-tree: parent[j] is the downstream section of j, parent[root] < 0.
 * One route per section; route i uses the sections on the path i -> root.
 * Throws CycleDetected on broken parent maps.
 */
Network tree_network(const std::vector<int>& parent, const Vec& C);

struct ParallelRoads {
    Network physical;  // 3 metered parallel roads feeding a common fourth
    Network virtual_;  // lower-triangular virtual resources, cumulative capacities
};

/**
 * The four-road route-choice preset: physical A (three parallel roads into a
 * common one) plus the virtual network (Abar, Cbar) whose nested capacities
 * C1, C1+C2, C1+C2+C3, C4 define the enlarged stability region. Requires
 * C1 + C2 + C3 < C4.
 */
ParallelRoads parallel_roads_virtual(const Vec& C);

/// Structural check: square, upper-triangular ones, C strictly decreasing.
bool is_linear_topology(const Mat& A, const Vec& C);

}  // namespace fairmeter
