#include "oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fairmeter::oracle {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double pf_value(const Vec& n, const Vec& lambda) {
    double f = 0.0;
    for (int i = 0; i < n.size(); ++i) {
        if (n[i] > 0.0) {
            if (lambda[i] <= 0.0) return -kInf;
            f += n[i] * std::log(lambda[i]);
        }
    }
    return f;
}
}  // namespace

Vec project_feasible(const Mat& A, const Vec& C, Vec x, int sweeps) {
    const int J = static_cast<int>(A.rows());
    const int I = static_cast<int>(A.cols());
    std::vector<Vec> corr(J + 1, Vec::Zero(I));
    for (int s = 0; s < sweeps; ++s) {
        double moved = 0.0;
        for (int j = 0; j <= J; ++j) {
            Vec y = x + corr[j];
            Vec xn;
            if (j < J) {
                const double viol = A.row(j).dot(y) - C[j];
                xn = viol > 0.0 ? Vec(y - viol / A.row(j).squaredNorm() * A.row(j).transpose())
                                : y;
            } else {
                xn = y.cwiseMax(0.0);
            }
            corr[j] = y - xn;
            moved = std::max(moved, (xn - x).lpNorm<Eigen::Infinity>());
            x = xn;
        }
        if (moved < 1e-15) break;
    }
    return x;
}

Vec pf_rates_pg(const Network& net, const Vec& n, Philox& rng, int starts, int iters) {
    const Mat& A = net.A;
    const Vec& C = net.C;
    const int I = net.num_routes();

    Vec best = Vec::Zero(I);
    double best_val = -kInf;
    for (int s = 0; s < starts; ++s) {
        // random strictly feasible start, supported routes only
        Vec x(I);
        for (int i = 0; i < I; ++i) x[i] = n[i] > 0.0 ? 0.1 + 0.9 * rng.uniform() : 0.0;
        double shrink = 1.0;
        for (int j = 0; j < C.size(); ++j) {
            const double load = A.row(j).dot(x);
            if (load > 0.0) shrink = std::min(shrink, 0.9 * C[j] / load);
        }
        x *= shrink;

        double t = 0.1;
        double fx = pf_value(n, x);
        for (int it = 0; it < iters; ++it) {
            Vec g = Vec::Zero(I);
            for (int i = 0; i < I; ++i)
                if (n[i] > 0.0) g[i] = n[i] / std::max(x[i], 1e-300);
            bool accepted = false;
            for (int bt = 0; bt < 40; ++bt) {
                Vec cand = project_feasible(A, C, x + t * g);
                for (int i = 0; i < I; ++i)
                    if (n[i] == 0.0) cand[i] = 0.0;
                const double fc = pf_value(n, cand);
                if (fc > fx) {
                    x = cand;
                    fx = fc;
                    t *= 1.3;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted && t < 1e-16) break;
        }
        if (fx > best_val) {
            best_val = fx;
            best = x;
        }
    }
    return best;
}

double pf_objective_pg(const Network& net, const Vec& n, Philox& rng, int starts, int iters) {
    return pf_value(n, pf_rates_pg(net, n, rng, starts, iters));
}

double pf_objective_barrier(const Network& net, const Vec& n, double gap) {
    const Mat& A = net.A;
    const Vec& C = net.C;
    const int I = net.num_routes();
    const int J = net.num_resources();

    std::vector<int> supp;
    for (int i = 0; i < I; ++i)
        if (n[i] > 0.0) supp.push_back(i);
    if (supp.empty()) return 0.0;
    const int S = static_cast<int>(supp.size());

    Mat As(J, S);
    Vec ns(S);
    for (int k = 0; k < S; ++k) {
        As.col(k) = A.col(supp[k]);
        ns[k] = n[supp[k]];
    }

    // strictly feasible start
    Vec x = Vec::Constant(S, 1.0);
    double shrink = 1.0;
    for (int j = 0; j < J; ++j) shrink = std::min(shrink, 0.5 * C[j] / As.row(j).sum());
    x *= shrink;

    // maximise sum ns log x + (1/t) sum log(C - As x) by damped Newton
    for (double t = 1.0; t < 2.0 / gap * J; t *= 10.0) {
        for (int newton = 0; newton < 80; ++newton) {
            const Vec slack = C - As * x;
            Vec g = (ns.array() / x.array()).matrix();
            Mat H = Mat::Zero(S, S);
            for (int k = 0; k < S; ++k) H(k, k) = -ns[k] / (x[k] * x[k]);
            for (int j = 0; j < J; ++j) {
                g -= (1.0 / t) / slack[j] * As.row(j).transpose();
                H -= (1.0 / t) / (slack[j] * slack[j]) * As.row(j).transpose() * As.row(j);
            }
            const Vec dx = (-H).ldlt().solve(g);
            const double decrement = g.dot(dx);
            if (decrement < 1e-14) break;

            double alpha = 1.0;
            auto ok = [&](const Vec& cand) {
                if ((cand.array() <= 0.0).any()) return false;
                return ((C - As * cand).array() > 0.0).all();
            };
            while (alpha > 1e-16 && !ok(x + alpha * dx)) alpha *= 0.5;
            x += alpha * dx;
        }
    }
    double f = 0.0;
    for (int k = 0; k < S; ++k) f += ns[k] * std::log(x[k]);
    return f;
}

double pf_objective_grid(const Network& net, const Vec& n) {
    const Mat& A = net.A;
    const Vec& C = net.C;
    const int I = net.num_routes();
    if (I > 3) throw std::invalid_argument("grid oracle only for I <= 3");

    Vec ub(I);
    for (int i = 0; i < I; ++i) {
        double b = kInf;
        for (int j = 0; j < C.size(); ++j)
            if (A(j, i) > 0.0) b = std::min(b, C[j]);
        ub[i] = b;
    }

    Vec lo = Vec::Zero(I), hi = ub;
    Vec best = Vec::Zero(I);
    double best_val = -kInf;
    const int steps = 40;
    for (int round = 0; round < 6; ++round) {
        std::vector<int> counter(I, 0);
        while (true) {
            Vec x(I);
            for (int i = 0; i < I; ++i)
                x[i] = n[i] > 0.0
                           ? lo[i] + (hi[i] - lo[i]) * counter[i] / static_cast<double>(steps)
                           : 0.0;
            if (((A * x - C).array() <= 1e-12).all()) {
                const double f = pf_value(n, x);
                if (f > best_val) {
                    best_val = f;
                    best = x;
                }
            }
            int d = 0;
            while (d < I && ++counter[d] > steps) counter[d++] = 0;
            if (d == I) break;
        }
        for (int i = 0; i < I; ++i) {
            const double w = (hi[i] - lo[i]) / steps * 2.0;
            lo[i] = std::max(0.0, best[i] - w);
            hi[i] = std::min(ub[i], best[i] + w);
        }
    }
    return best_val;
}

Vec delta_qp_enumerate(const Network& net, const TrafficParams& params, const Vec& w) {
    const Mat B = net.A * params.mu.cwiseInverse().asDiagonal();
    const Vec& nu = params.nu;
    const int J = static_cast<int>(B.rows());
    const int I = static_cast<int>(B.cols());
    const double tol = 1e-9 * std::max(1.0, w.lpNorm<Eigen::Infinity>());

    Vec best = Vec::Zero(I);
    double best_obj = kInf;
    bool found = false;

    for (unsigned sz = 0; sz < (1u << J); ++sz) {
        std::vector<int> S;
        for (int j = 0; j < J; ++j)
            if (sz & (1u << j)) S.push_back(j);
        for (unsigned zz = 0; zz < (1u << I); ++zz) {
            std::vector<int> F;
            for (int i = 0; i < I; ++i)
                if (!(zz & (1u << i))) F.push_back(i);

            Vec n = Vec::Zero(I);
            Vec y = Vec::Zero(J);
            if (!S.empty()) {
                Mat Bsf(S.size(), F.size());
                for (std::size_t a = 0; a < S.size(); ++a)
                    for (std::size_t b = 0; b < F.size(); ++b) Bsf(a, b) = B(S[a], F[b]);
                Mat M = Mat::Zero(S.size(), S.size());
                for (std::size_t b = 0; b < F.size(); ++b)
                    M += 0.5 * nu[F[b]] * Bsf.col(b) * Bsf.col(b).transpose();
                Eigen::FullPivLU<Mat> lu(M);
                if (!lu.isInvertible()) continue;
                Vec ws(S.size());
                for (std::size_t a = 0; a < S.size(); ++a) ws[a] = w[S[a]];
                const Vec ys = lu.solve(ws);
                for (std::size_t a = 0; a < S.size(); ++a) y[S[a]] = ys[a];
                const Vec by = B.transpose() * y;
                for (std::size_t b = 0; b < F.size(); ++b) n[F[b]] = 0.5 * nu[F[b]] * by[F[b]];
            }

            // KKT checks: dual feasibility, primal feasibility, stationarity sign
            if ((y.array() < -tol).any()) continue;
            if ((n.array() < -tol).any()) continue;
            const Vec by = B.transpose() * y;
            bool ok = true;
            for (int i = 0; i < I && ok; ++i)
                if (n[i] == 0.0 && by[i] > tol) ok = false;  // z_i = -(B'y)_i must be >= 0
            const Vec slack = B * n - w;
            for (int j = 0; j < J && ok; ++j) {
                if (slack[j] < -tol) ok = false;
                if (y[j] > tol && std::abs(slack[j]) > tol) ok = false;
            }
            if (!ok) continue;

            double obj = 0.0;
            for (int i = 0; i < I; ++i)
                if (n[i] != 0.0) obj += n[i] * n[i] / nu[i];
            if (obj < best_obj) {
                best_obj = obj;
                best = n.cwiseMax(0.0);
                found = true;
            }
        }
    }
    if (!found) throw std::runtime_error("delta_qp_enumerate: no KKT-consistent active set");
    return best;
}

Network random_network(Philox& rng, int max_j, int max_i, bool force_local_columns) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const int J = 1 + static_cast<int>(rng.below(max_j));
        const int I =
            std::max(J, 1 + static_cast<int>(rng.below(max_i)));
        Mat A = Mat::Zero(J, I);
        int col = 0;
        if (force_local_columns) {
            for (; col < J; ++col) A(col, col) = 1.0;
        }
        for (; col < I; ++col) {
            for (int j = 0; j < J; ++j) A(j, col) = rng.uniform() < 0.5 ? 1.0 : 0.0;
            if (A.col(col).sum() == 0.0) A(static_cast<int>(rng.below(J)), col) = 1.0;
        }
        Vec C(J);
        for (int j = 0; j < J; ++j) C[j] = 0.5 + 2.5 * rng.uniform();
        try {
            return validate(A, C);
        } catch (const ValidationError&) {
            continue;
        }
    }
    throw std::runtime_error("random_network: could not sample a full-rank matrix");
}

TrafficParams random_traffic(Philox& rng, const Network& net, double utilization) {
    const int I = net.num_routes();
    Vec x(I), mu(I);
    for (int i = 0; i < I; ++i) {
        x[i] = 0.2 + 0.8 * rng.uniform();
        mu[i] = 0.5 + 1.5 * rng.uniform();
    }
    const Vec loads = (net.A * x).array() / net.C.array();
    x *= utilization / loads.maxCoeff();
    return make_traffic((x.array() * mu.array()).matrix(), mu);
}

}  // namespace fairmeter::oracle
