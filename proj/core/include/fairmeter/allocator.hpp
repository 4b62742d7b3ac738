#pragma once

#include <vector>

#include "fairmeter/network.hpp"

namespace fairmeter {

/**
 * Result of the proportionally fair program
 *
 *   maximise   sum_{i: n_i > 0} n_i log lambda_i
 *   subject to A lambda <= C,  lambda_i >= 0,  lambda_i = 0 where n_i = 0.
 *
 * q holds the Lagrange multipliers of the capacity constraints; whenever
 * n_i > 0, lambda_i = n_i / (A'q)_i and q_j (C_j - (A lambda)_j) = 0.
 */
struct Allocation {
    Vec lambda;               // I
    Vec q;                    // J, nonnegative duals
    std::vector<int> active;  // resources with q_j above tolerance
    double objective = 0.0;   // sum over n_i > 0 of n_i log lambda_i
    int iterations = 0;
};

struct AllocOptions {
    double feas_tol = 1e-9;  // allowed absolute capacity violation
    double kkt_tol = 1e-10;  // stop when max(|q.grad|, violation) is below
    int max_iterations = 50000;
};

/**
 * Solve the proportionally fair program by projected gradient descent on the
 * dual g(q) = q'C - sum n_i log (A'q)_i with Barzilai-Borwein steps and a
 * backtracking (Armijo) line search. Counts are normalised internally, which
 * makes the returned rates exactly invariant under n -> c n. When the dual
 * optimum is not unique the minimum-Euclidean-norm dual is returned.
 *
 * Throws SolverDiverged if the iteration cap is hit short of tolerance.
 */
Allocation allocate(const Network& net, const Vec& n, const AllocOptions& opts = {});

/// Warm-started repeated solves against one network (simulation inner loops).
class PfSolver {
public:
    explicit PfSolver(const Network& net, AllocOptions opts = {});
    const Allocation& solve(const Vec& n);

private:
    const Network* net_;
    AllocOptions opts_;
    Vec warm_q_;
    Allocation last_;
};

/// Per-route delay estimates d = A'q.
Vec delays_from_duals(const Network& net, const Vec& q);

/// F(n) = sum_i n_i^2 / nu_i.
double lyapunov_F(const TrafficParams& params, const Vec& n);

enum class BrownianModel { Flow, Motorway };

/**
 * Drift, covariance and workload-cone map for the Brownian workload model.
 * Flow model:     Gamma = 2 A [mu]^-1 [nu] [mu]^-1 A',  G = Gamma / 2.
 * Motorway model: Gamma = sigma^2 A [rho] A',           G = Gamma / sigma^2.
 * In both, theta = C - A rho and the workload cone is W = G R+^J.
 */
struct BrownianSpec {
    Vec theta;
    Mat gamma;
    Mat cone_map;
    BrownianModel model = BrownianModel::Flow;
};

BrownianSpec covariance_gamma(const Network& net, const TrafficParams& params,
                              BrownianModel model);

struct ConeCheck {
    bool contained = false;
    Vec q;            // witness with w = G q (exact or least-squares)
    double residual = 0.0;
};

/**
 * Membership of w in the workload cone W = G R+^J. With invertible G this is
 * the sign of G^-1 w; otherwise membership is decided by a nonnegative
 * least-squares fit with residual threshold 1e-8.
 */
ConeCheck cone_contains(const BrownianSpec& spec, const Vec& w, double tol = 1e-9);

/**
 * The linear-network workload cone, written as the chain of slope conditions
 * (w_{j-1} - w_j)/rho_{j-1} <= (w_j - w_{j+1})/rho_j with w_{J+1} = 0 and a
 * zero left-hand side at j = 1.
 */
bool linear_cone_check(const Vec& rho, const Vec& w, double tol = 1e-9);

/**
 * Closed-form lift onto the invariant manifold:
 * Delta(w) = [rho] A' (A [mu]^-1 [nu] [mu]^-1 A')^-1 w, valid on the workload
 * cone. Throws OutsideCone when the witness has a negative component rather
 * than clipping.
 */
Vec lift_delta(const Network& net, const TrafficParams& params, const Vec& w,
               double tol = 1e-9);

/**
 * The defining quadratic program of the lift, usable for any w >= 0:
 * minimise F(n) subject to A [mu]^-1 n >= w, n >= 0. Solved exactly by an
 * active-set method on the (piecewise quadratic) dual, warm-started with the
 * previous call's active pattern; agrees with lift_delta on the cone and
 * extends it off the cone. Falls back to exhaustive pattern enumeration on
 * the rare degenerate instance.
 */
class DeltaQp {
public:
    DeltaQp(const Network& net, const TrafficParams& params);
    Vec solve(const Vec& w);

private:
    bool try_pattern(const Vec& w, std::vector<int>& S, Vec& n_out) const;
    Vec enumerate(const Vec& w) const;

    Mat B_;   // A [mu]^-1
    Vec nu_;
    std::vector<int> warm_S_;
};

Vec lift_delta_qp(const Network& net, const TrafficParams& params, const Vec& w);

/// Rates, duals and per-line delay estimates from one metering computation.
struct PfRates {
    Vec lambda;
    Vec q;
    Vec d;
    double objective = 0.0;
};

/**
 * Exact proportionally fair rates for the linear network (capacities strictly
 * decreasing). The nested constraints make the delays d_i the isotonic fit of
 * block densities, so the whole solve is a pool-adjacent-violators pass:
 * O(J) amortised, suitable for per-step use inside simulations.
 */
PfRates pf_linear(const Vec& C, const Vec& m);

/// Exact proportionally fair rates for the three-parallel-roads topology
/// (requires C1 + C2 + C3 < C4); reduces to a one-dimensional root in q_4.
PfRates pf_parallel4(const Vec& C, const Vec& m);

/// Lawson-Hanson nonnegative least squares: argmin_{x >= 0} |A x - b|_2.
Vec nnls(const Mat& A, const Vec& b, double tol = 1e-12);

namespace detail {

/// Allocation-free core of pf_linear for per-step use in simulation loops.
/// work_b / work_cap / work_start must hold J entries each.
void pf_linear_core(const double* C, const double* m, int J, double* lambda, double* q,
                    double* d, double* work_b, double* work_cap, int* work_start);

/// Allocation-free core of pf_parallel4.
void pf_parallel4_core(const double* C, const double* m, double* lambda, double* q, double* d);

}  // namespace detail

}  // namespace fairmeter
