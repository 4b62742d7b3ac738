#include "fairmeter/allocator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numeric>

namespace fairmeter {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dual objective g(q) = q'C - sum_{i in supp} n_i log((A'q)_i); +inf once any
// supported route sees zero aggregate dual.
double dual_value(const Mat& A, const Vec& C, const Vec& n, const std::vector<int>& supp,
                  const Vec& q) {
    double g = q.dot(C);
    for (int i : supp) {
        const double d = A.col(i).dot(q);
        if (d <= 0.0) return kInf;
        g -= n[i] * std::log(d);
    }
    return g;
}

struct DualState {
    Vec lambda;  // candidate rates at q (zero off support)
    Vec grad;    // C - A lambda
    double kkt;  // max of CS residual and capacity violation
};

DualState eval_dual(const Mat& A, const Vec& C, const Vec& n, const std::vector<int>& supp,
                    const Vec& q) {
    DualState st;
    st.lambda = Vec::Zero(A.cols());
    for (int i : supp) st.lambda[i] = n[i] / A.col(i).dot(q);
    st.grad = C - A * st.lambda;
    st.kkt = 0.0;
    for (int j = 0; j < C.size(); ++j) {
        st.kkt = std::max(st.kkt, std::abs(q[j] * st.grad[j]));
        st.kkt = std::max(st.kkt, -st.grad[j]);
    }
    return st;
}

// Minimum-norm dual on the optimal face: lambda (hence the pinned per-route
// delays d_i = n_i / lambda_i) is unique, the duals may not be. Solve
// min |q|_2 s.t. (A'q)_i = d_i on the support, q = 0 off the tight set,
// q >= 0, via the minimum-norm least-squares solution with an active-set
// clamp for negative entries.
bool min_norm_dual(const Mat& A, const std::vector<int>& supp, const std::vector<int>& tight,
                   const Vec& dstar, Vec& q_out) {
    const int S = static_cast<int>(supp.size());
    std::vector<int> cols = tight;
    for (int pass = 0; pass < static_cast<int>(tight.size()) + 1; ++pass) {
        if (cols.empty()) return false;
        Mat B(S, cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c)
            for (int r = 0; r < S; ++r) B(r, c) = A(cols[c], supp[r]);
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(B);
        Vec x = cod.solve(dstar);
        int worst = -1;
        double worst_val = -1e-12;
        for (int c = 0; c < x.size(); ++c)
            if (x[c] < worst_val) { worst_val = x[c]; worst = c; }
        if (worst < 0) {
            if ((B * x - dstar).lpNorm<Eigen::Infinity>() >
                1e-8 * std::max(1.0, dstar.lpNorm<Eigen::Infinity>()))
                return false;
            q_out.setZero();
            for (std::size_t c = 0; c < cols.size(); ++c) q_out[cols[c]] = std::max(0.0, x[c]);
            return true;
        }
        cols.erase(cols.begin() + worst);
    }
    return false;
}

Allocation allocate_impl(const Network& net, const Vec& n, const AllocOptions& opts,
                         const Vec* warm_q) {
    const int J = net.num_resources();
    const int I = net.num_routes();
    if (n.size() != I) throw ValidationError("allocate: n length must equal route count");
    if ((n.array() < 0).any() || !n.allFinite())
        throw ValidationError("allocate: n must be finite and nonnegative");

    Allocation out;
    out.lambda = Vec::Zero(I);
    out.q = Vec::Zero(J);

    // Routes whose count is below a relative floor are treated as empty:
    // their barrier term is beneath double-precision resolution and only
    // destabilises the solve. Keeps Lambda scale invariant.
    double scale = n.maxCoeff();
    std::vector<int> supp;
    for (int i = 0; i < I; ++i)
        if (n[i] > 1e-9 * scale) supp.push_back(i);
    if (supp.empty()) return out;  // vacuous program: lambda = 0, q = 0

    // Normalised counts make the solve (and hence the rates) exactly
    // invariant under n -> c n; duals are rescaled on the way out.
    const Vec nhat = n / scale;
    const Mat& A = net.A;
    const Vec& C = net.C;

    Vec q(J);
    for (int j = 0; j < J; ++j) q[j] = A.row(j).dot(nhat) / C[j] + 1.0;
    if (warm_q && warm_q->size() == J && (warm_q->array() >= 0).all()) {
        Vec cand = warm_q->cwiseMax(0.0);
        if (dual_value(A, C, nhat, supp, cand) < dual_value(A, C, nhat, supp, q)) q = cand;
    }

    double g_cur = dual_value(A, C, nhat, supp, q);
    DualState st = eval_dual(A, C, nhat, supp, q);
    Vec q_prev = q, grad_prev = st.grad;
    double step = 1.0 / (1.0 + st.grad.lpNorm<Eigen::Infinity>());

    // Active-set Newton finisher: solves the reduced stationarity system on
    // the coordinates that look active, clipping any that leave the orthant
    // and re-solving. Clears the slow projected-gradient tail near faces,
    // where |q_j grad_j| otherwise decays only linearly.
    auto newton_polish = [&]() {
        bool moved = false;
        for (int round = 0; round < 40 && st.kkt > opts.kkt_tol; ++round) {
            std::vector<int> act;
            for (int j = 0; j < J; ++j)
                if (q[j] > 0.0 || st.grad[j] < -1e-12) act.push_back(j);
            if (act.empty()) break;
            const int a = static_cast<int>(act.size());
            Mat H = Mat::Zero(a, a);
            Vec g(a);
            for (int r = 0; r < a; ++r) g[r] = st.grad[act[r]];
            for (int i : supp) {
                const double d = A.col(i).dot(q);
                const double wgt = nhat[i] / (d * d);
                for (int r = 0; r < a; ++r) {
                    const double ar = A(act[r], i);
                    if (ar == 0.0) continue;
                    for (int c = 0; c < a; ++c) H(r, c) += wgt * ar * A(act[c], i);
                }
            }
            H.diagonal().array() += 1e-14 * (1.0 + H.diagonal().maxCoeff());
            const Vec dq = H.ldlt().solve(-g);
            if (!dq.allFinite()) break;

            bool accepted = false;
            for (double damp : {1.0, 0.5, 0.25, 0.1, 0.01}) {
                Vec q_new = q;
                for (int r = 0; r < a; ++r)
                    q_new[act[r]] = std::max(0.0, q[act[r]] + damp * dq[r]);
                const double g_new = dual_value(A, C, nhat, supp, q_new);
                if (g_new <= g_cur + 1e-14 * (1.0 + std::abs(g_cur))) {
                    const DualState st_new = eval_dual(A, C, nhat, supp, q_new);
                    if (st_new.kkt < st.kkt || g_new < g_cur) {
                        q = q_new;
                        g_cur = g_new;
                        st = st_new;
                        accepted = true;
                        moved = true;
                        break;
                    }
                }
            }
            if (!accepted) break;
        }
        return moved;
    };

    int it = 0;
    for (; it < opts.max_iterations && st.kkt > opts.kkt_tol; ++it) {
        if (it % 25 == 20 && st.kkt < 1e-2) {
            newton_polish();
            if (st.kkt <= opts.kkt_tol) break;
        }
        // Barzilai-Borwein trial step, safeguarded
        if (it > 0) {
            const Vec s = q - q_prev;
            const Vec y = st.grad - grad_prev;
            const double sy = s.dot(y);
            step = sy > 1e-300 ? std::clamp(s.dot(s) / sy, 1e-12, 1e12) : step * 2.0;
        }
        q_prev = q;
        grad_prev = st.grad;

        double t = step;
        Vec q_new;
        double g_new = kInf;
        for (int bt = 0; bt < 70; ++bt) {
            q_new = (q - t * st.grad).cwiseMax(0.0);
            g_new = dual_value(A, C, nhat, supp, q_new);
            if (g_new <= g_cur + 1e-4 * st.grad.dot(q_new - q)) break;
            t *= 0.5;
        }
        if (!(g_new < kInf)) break;
        q = q_new;
        g_cur = g_new;
        st = eval_dual(A, C, nhat, supp, q);
    }
    if (st.kkt > opts.kkt_tol) newton_polish();
    if (st.kkt > opts.kkt_tol) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3e", st.kkt);
        throw SolverDiverged("allocate: KKT residual " + std::string(buf) + " after " +
                             std::to_string(it) + " iterations");
    }

    // Deterministic dual: project onto the minimum-norm point of the optimal
    // dual face (no-op when the dual is already unique).
    Vec dstar(supp.size());
    for (std::size_t k = 0; k < supp.size(); ++k) dstar[k] = A.col(supp[k]).dot(q);
    std::vector<int> tight;
    const double slack_tol = 1e-8 * (1.0 + C.lpNorm<Eigen::Infinity>());
    for (int j = 0; j < J; ++j)
        if (st.grad[j] <= slack_tol) tight.push_back(j);
    Vec q_min(J);
    if (min_norm_dual(A, supp, tight, dstar, q_min)) {
        double cs = 0.0;
        for (int j = 0; j < J; ++j) cs = std::max(cs, std::abs(q_min[j] * st.grad[j]));
        if (cs <= 1e-9 * (1.0 + dstar.lpNorm<Eigen::Infinity>())) q = q_min;
    }

    for (std::size_t k = 0; k < supp.size(); ++k) {
        const int i = supp[k];
        out.lambda[i] = nhat[i] / dstar[k];
        out.objective += n[i] * std::log(out.lambda[i]);
    }
    out.q = q * scale;
    const double active_tol = 1e-8 * (1.0 + out.q.lpNorm<Eigen::Infinity>());
    for (int j = 0; j < J; ++j)
        if (out.q[j] > active_tol) out.active.push_back(j);
    out.iterations = it;
    return out;
}

}  // namespace

Allocation allocate(const Network& net, const Vec& n, const AllocOptions& opts) {
    return allocate_impl(net, n, opts, nullptr);
}

PfSolver::PfSolver(const Network& net, AllocOptions opts) : net_(&net), opts_(opts) {}

const Allocation& PfSolver::solve(const Vec& n) {
    last_ = allocate_impl(*net_, n, opts_, warm_q_.size() ? &warm_q_ : nullptr);
    // warm start keeps the pre-rescale magnitude comparable across calls
    warm_q_ = last_.q;
    return last_;
}

Vec delays_from_duals(const Network& net, const Vec& q) {
    if (q.size() != net.num_resources())
        throw ValidationError("delays: q length must equal resource count");
    return net.A.transpose() * q;
}

double lyapunov_F(const TrafficParams& params, const Vec& n) {
    double f = 0.0;
    for (int i = 0; i < n.size(); ++i)
        if (n[i] != 0.0) f += n[i] * n[i] / params.nu[i];
    return f;
}

BrownianSpec covariance_gamma(const Network& net, const TrafficParams& params,
                              BrownianModel model) {
    BrownianSpec spec;
    spec.model = model;
    spec.theta = net.C - net.A * params.rho;
    if (model == BrownianModel::Flow) {
        const Vec d = params.nu.array() / (params.mu.array() * params.mu.array());
        spec.cone_map = net.A * d.asDiagonal() * net.A.transpose();
        spec.gamma = 2.0 * spec.cone_map;
    } else {
        spec.cone_map = net.A * params.rho.asDiagonal() * net.A.transpose();
        spec.gamma = params.sigma2 * spec.cone_map;
    }
    Eigen::FullPivLU<Mat> lu(spec.gamma);
    lu.setThreshold(1e-12);
    if (lu.rank() < spec.gamma.rows())
        throw SingularGamma("covariance: Gamma is singular; check rank of A and positivity of loads");
    return spec;
}

ConeCheck cone_contains(const BrownianSpec& spec, const Vec& w, double tol) {
    ConeCheck chk;
    const Mat& G = spec.cone_map;
    if (G.rows() == G.cols()) {
        Eigen::FullPivLU<Mat> lu(G);
        if (lu.isInvertible()) {
            chk.q = lu.solve(w);
            chk.residual = (G * chk.q - w).lpNorm<Eigen::Infinity>();
            chk.contained = chk.q.minCoeff() >= -tol;
            return chk;
        }
    }
    chk.q = nnls(G, w);
    chk.residual = (G * chk.q - w).lpNorm<Eigen::Infinity>();
    chk.contained = chk.residual <= 1e-8 * std::max(1.0, w.lpNorm<Eigen::Infinity>());
    return chk;
}

bool linear_cone_check(const Vec& rho, const Vec& w, double tol) {
    const int J = static_cast<int>(w.size());
    if (rho.size() != J) throw ValidationError("linear cone: rho and w must have equal length");
    double prev = 0.0;
    for (int j = 0; j < J; ++j) {
        const double next = j + 1 < J ? w[j + 1] : 0.0;
        const double r = (w[j] - next) / rho[j];
        if (prev > r + tol) return false;
        prev = r;
    }
    return true;
}

Vec lift_delta(const Network& net, const TrafficParams& params, const Vec& w, double tol) {
    const BrownianSpec spec = covariance_gamma(net, params, BrownianModel::Flow);
    const ConeCheck chk = cone_contains(spec, w, tol);
    if (!chk.contained)
        throw OutsideCone("lift: w is outside the workload cone (negative dual witness)");
    return params.rho.asDiagonal() * (net.A.transpose() * chk.q);
}

DeltaQp::DeltaQp(const Network& net, const TrafficParams& params)
    : B_(net.A * params.mu.cwiseInverse().asDiagonal()), nu_(params.nu) {}

// One candidate set S of tight constraints: solve for the multipliers with
// the sign pattern of B'y iterated to a fixed point, then test the KKT
// conditions. On success S is updated in place to the certified set.
bool DeltaQp::try_pattern(const Vec& w, std::vector<int>& S, Vec& n_out) const {
    const int J = static_cast<int>(B_.rows());
    const int I = static_cast<int>(B_.cols());
    const double tol = 1e-10 * std::max(1.0, w.lpNorm<Eigen::Infinity>());

    std::vector<int> cur = S;
    for (int outer = 0; outer < 3 * J + 8; ++outer) {
        Vec y = Vec::Zero(J);
        std::vector<bool> in_F(I, true);
        bool inner_ok = false;
        if (cur.empty()) {
            inner_ok = true;
        } else {
            const int a = static_cast<int>(cur.size());
            Vec ws(a);
            for (int r = 0; r < a; ++r) ws[r] = w[cur[r]];
            for (int pass = 0; pass < 4 * I + 8; ++pass) {
                Mat M = Mat::Zero(a, a);
                for (int i = 0; i < I; ++i) {
                    if (!in_F[i]) continue;
                    Vec col(a);
                    for (int r = 0; r < a; ++r) col[r] = B_(cur[r], i);
                    M += 0.5 * nu_[i] * col * col.transpose();
                }
                Eigen::LDLT<Mat> ldlt(M);
                if (ldlt.info() != Eigen::Success) break;
                const Vec ys = ldlt.solve(ws);
                if ((M * ys - ws).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + ws.lpNorm<Eigen::Infinity>()))
                    break;
                y.setZero();
                for (int r = 0; r < a; ++r) y[cur[r]] = ys[r];
                const Vec by = B_.transpose() * y;
                bool changed = false;
                for (int i = 0; i < I; ++i) {
                    const bool pos = by[i] > 0.0;
                    if (pos != in_F[i]) {
                        in_F[i] = pos;
                        changed = true;
                    }
                }
                if (!changed) {
                    inner_ok = true;
                    break;
                }
            }
        }
        if (!inner_ok) return false;

        const Vec by = B_.transpose() * y;
        Vec n = 0.5 * nu_.cwiseProduct(by.cwiseMax(0.0));

        // dual feasibility: drop the most negative multiplier
        int worst_neg = -1;
        double worst_val = -tol;
        for (std::size_t r = 0; r < cur.size(); ++r)
            if (y[cur[r]] < worst_val) {
                worst_val = y[cur[r]];
                worst_neg = static_cast<int>(r);
            }
        if (worst_neg >= 0) {
            cur.erase(cur.begin() + worst_neg);
            continue;
        }

        // primal feasibility: add the most violated constraint
        const Vec slack = B_ * n - w;
        int worst_con = -1;
        double worst_slk = -tol;
        for (int j = 0; j < J; ++j) {
            bool inS = false;
            for (int r : cur) inS |= (r == j);
            if (!inS && slack[j] < worst_slk) {
                worst_slk = slack[j];
                worst_con = j;
            }
        }
        if (worst_con >= 0) {
            cur.push_back(worst_con);
            continue;
        }

        S = cur;
        n_out = n.cwiseMax(0.0);
        return true;
    }
    return false;
}

Vec DeltaQp::enumerate(const Vec& w) const {
    const int J = static_cast<int>(B_.rows());
    Vec best;
    double best_obj = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << J); ++mask) {
        std::vector<int> S;
        for (int j = 0; j < J; ++j)
            if (mask & (1u << j)) S.push_back(j);
        Vec n;
        std::vector<int> s2 = S;
        if (!try_pattern(w, s2, n)) continue;
        double obj = 0.0;
        for (int i = 0; i < n.size(); ++i)
            if (n[i] != 0.0) obj += n[i] * n[i] / nu_[i];
        if (obj < best_obj) {
            best_obj = obj;
            best = n;
        }
    }
    if (best.size() == 0)
        throw SolverDiverged("lift qp: no KKT-consistent active set found");
    return best;
}

Vec DeltaQp::solve(const Vec& w) {
    if (w.size() != B_.rows()) throw ValidationError("lift qp: w has wrong dimension");

    Vec n;
    std::vector<int> S = warm_S_;
    if (try_pattern(w, S, n)) {
        warm_S_ = S;
        return n;
    }
    // cold start: every constraint with positive requirement tight
    S.clear();
    for (int j = 0; j < B_.rows(); ++j)
        if (w[j] > 0.0) S.push_back(j);
    if (try_pattern(w, S, n)) {
        warm_S_ = S;
        return n;
    }
    n = enumerate(w);
    return n;
}

Vec lift_delta_qp(const Network& net, const TrafficParams& params, const Vec& w) {
    DeltaQp qp(net, params);
    return qp.solve(w);
}

namespace detail {

void pf_linear_core(const double* C, const double* m, int J, double* lambda, double* q,
                    double* d, double* work_b, double* work_cap, int* work_start) {
    // Pool adjacent violators over blocks of consecutive lines. A block
    // [a, b] shares one delay t = (sum of m) / (C_a - C_{b+1}); strict
    // monotonicity of t across blocks is exactly dual feasibility.
    int top = -1;
    for (int i = 0; i < J; ++i) {
        double b = m[i];
        double cap = C[i] - (i + 1 < J ? C[i + 1] : 0.0);
        int st = i;
        while (top >= 0 && work_b[top] * cap >= b * work_cap[top]) {
            b += work_b[top];
            cap += work_cap[top];
            st = work_start[top];
            --top;
        }
        ++top;
        work_b[top] = b;
        work_cap[top] = cap;
        work_start[top] = st;
    }

    double t_prev = 0.0;
    for (int blk = 0; blk <= top; ++blk) {
        const int s = work_start[blk];
        const int e = blk < top ? work_start[blk + 1] : J;
        const double t = work_b[blk] > 0.0 ? work_b[blk] / work_cap[blk] : 0.0;
        for (int i = s; i < e; ++i) {
            q[i] = 0.0;
            d[i] = t;
            lambda[i] = m[i] > 0.0 ? m[i] / t : 0.0;
        }
        q[s] = t - t_prev;
        t_prev = t;
    }
}

}  // namespace detail

PfRates pf_linear(const Vec& C, const Vec& m) {
    const int J = static_cast<int>(C.size());
    if (m.size() != J) throw ValidationError("pf_linear: m length must equal section count");

    PfRates r;
    r.lambda = Vec::Zero(J);
    r.q = Vec::Zero(J);
    r.d = Vec::Zero(J);
    std::vector<double> wb(J), wc(J);
    std::vector<int> ws(J);
    detail::pf_linear_core(C.data(), m.data(), J, r.lambda.data(), r.q.data(), r.d.data(),
                           wb.data(), wc.data(), ws.data());
    for (int i = 0; i < J; ++i)
        if (m[i] > 0.0) r.objective += m[i] * std::log(r.lambda[i]);
    return r;
}

namespace detail {

void pf_parallel4_core(const double* C, const double* m, double* lambda, double* q, double* d) {
    for (int i = 0; i < 4; ++i) lambda[i] = q[i] = 0.0;

    if (m[3] > 0.0) {
        // Resource 4 is tight; q4 solves sum_i min(C_i, m_i/q4) + m4/q4 = C4,
        // a decreasing piecewise form with breakpoints m_i / C_i. Roads with
        // breakpoint above q4 are tight, the rest share via q4 alone.
        std::array<int, 3> idx{0, 1, 2};
        auto bp = [&](int i) { return m[i] / C[i]; };
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return bp(a) > bp(b); });

        double q4 = 0.0;
        int tight_count = 0;
        double best_miss = kInf;
        for (int k = 0; k <= 3; ++k) {
            double sum_c = 0.0;
            double sum_m = m[3];
            for (int l = 0; l < 3; ++l) {
                if (l < k)
                    sum_c += C[idx[l]];
                else
                    sum_m += m[idx[l]];
            }
            const double cand = sum_m / (C[3] - sum_c);
            const double hi = k == 0 ? kInf : bp(idx[k - 1]);
            const double lo = k == 3 ? 0.0 : bp(idx[k]);
            const double miss = std::max({0.0, cand - hi, lo - cand});
            if (miss < best_miss) {
                best_miss = miss;
                q4 = cand;
                tight_count = k;
            }
            if (miss <= 1e-12 * std::max(1.0, cand)) break;
        }
        for (int l = 0; l < 3; ++l) {
            const int i = idx[l];
            if (l < tight_count) {
                lambda[i] = C[i];
                q[i] = std::max(0.0, m[i] / C[i] - q4);
            } else if (m[i] > 0.0) {
                lambda[i] = m[i] / q4;
            }
        }
        q[3] = q4;
        lambda[3] = m[3] / q4;
    } else {
        // Common road slack: every nonempty parallel road runs at capacity.
        for (int i = 0; i < 3; ++i) {
            if (m[i] > 0.0) {
                lambda[i] = C[i];
                q[i] = m[i] / C[i];
            }
        }
    }

    for (int i = 0; i < 3; ++i) d[i] = q[i] + q[3];
    d[3] = q[3];
}

}  // namespace detail

PfRates pf_parallel4(const Vec& C, const Vec& m) {
    if (C.size() != 4 || m.size() != 4)
        throw ValidationError("pf_parallel4: needs 4 capacities and 4 line sizes");
    if (!(C[0] + C[1] + C[2] < C[3]))
        throw CapacityOrdering("pf_parallel4: requires C1 + C2 + C3 < C4");

    PfRates r;
    r.lambda = Vec::Zero(4);
    r.q = Vec::Zero(4);
    r.d = Vec::Zero(4);
    detail::pf_parallel4_core(C.data(), m.data(), r.lambda.data(), r.q.data(), r.d.data());
    for (int i = 0; i < 4; ++i)
        if (m[i] > 0.0) r.objective += m[i] * std::log(r.lambda[i]);
    return r;
}

Vec nnls(const Mat& A, const Vec& b, double tol) {
    const int n = static_cast<int>(A.cols());
    Vec x = Vec::Zero(n);
    std::vector<bool> passive(n, false);
    Vec resid = b;

    for (int outer = 0; outer < 3 * n + 10; ++outer) {
        const Vec w = A.transpose() * resid;
        int best = -1;
        double best_w = tol * std::max(1.0, b.lpNorm<Eigen::Infinity>());
        for (int i = 0; i < n; ++i)
            if (!passive[i] && w[i] > best_w) { best_w = w[i]; best = i; }
        if (best < 0) break;
        passive[best] = true;

        for (int inner = 0; inner < 3 * n + 10; ++inner) {
            std::vector<int> P;
            for (int i = 0; i < n; ++i)
                if (passive[i]) P.push_back(i);
            Mat Ap(A.rows(), P.size());
            for (std::size_t c = 0; c < P.size(); ++c) Ap.col(c) = A.col(P[c]);
            const Vec z = Ap.colPivHouseholderQr().solve(b);

            double alpha = 1.0;
            int blocker = -1;
            for (std::size_t c = 0; c < P.size(); ++c) {
                if (z[c] <= 0.0) {
                    const double a = x[P[c]] / (x[P[c]] - z[c]);
                    if (a < alpha) { alpha = a; blocker = static_cast<int>(c); }
                }
            }
            if (blocker < 0) {
                x.setZero();
                for (std::size_t c = 0; c < P.size(); ++c) x[P[c]] = z[c];
                break;
            }
            for (std::size_t c = 0; c < P.size(); ++c)
                x[P[c]] += alpha * (z[c] - x[P[c]]);
            for (std::size_t c = 0; c < P.size(); ++c)
                if (std::abs(x[P[c]]) < 1e-14) { x[P[c]] = 0.0; passive[P[c]] = false; }
        }
        resid = b - A * x;
    }
    return x;
}

}  // namespace fairmeter
