#include "fairmeter/route_choice.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace fairmeter {

ChoiceModel ChoiceModel::parallel4() {
    ChoiceModel cm;
    cm.choice_sets = {{0}, {0, 1}, {0, 1, 2}, {3}};
    return cm;
}

int choose_line(const std::vector<int>& choice_set, const Vec& d) {
    if (choice_set.empty()) throw ValidationError("choose_line: empty choice set");
    int best = choice_set.front();
    for (int line : choice_set)
        if (d[line] < d[best]) best = line;
    return best;
}

EnlargedStabilityReport enlarged_stability(const Vec& rho, const Vec& C) {
    if (rho.size() != 4 || C.size() != 4)
        throw ValidationError("enlarged stability: needs 4 loads and 4 capacities");
    const ParallelRoads pr = parallel_roads_virtual(C);
    EnlargedStabilityReport rep;
    rep.physical_margins = pr.physical.C - pr.physical.A * rho;
    rep.virtual_margins = pr.virtual_.C - pr.virtual_.A * rho;
    rep.capcon_stable = (rep.physical_margins.array() > 0).all();
    rep.enlarged_stable = (rep.virtual_margins.array() > 0).all();
    return rep;
}

VirtualLaw zeta_params(const Vec& rho, const Vec& C, double sigma2) {
    const auto rep = enlarged_stability(rho, C);
    if (!rep.enlarged_stable)
        throw UnstableLoad("zeta: enlarged stability condition violated");
    VirtualLaw law;
    law.zeta = 2.0 / sigma2 * rep.virtual_margins;
    law.mean_delay = Vec::Zero(4);
    law.var_delay = Vec::Zero(4);
    for (int i = 0; i < 4; ++i) {
        for (int j = i; j < 4; ++j) {
            law.mean_delay[i] += 1.0 / law.zeta[j];
            law.var_delay[i] += 1.0 / (law.zeta[j] * law.zeta[j]);
        }
    }
    law.mean_m = rho.cwiseProduct(law.mean_delay);
    return law;
}

RouteChoiceResult simulate_route_choice(const Vec& rho, const Vec& C, double sigma2,
                                        ArrivalMode mode, const RouteChoiceConfig& cfg) {
    const ParallelRoads pr = parallel_roads_virtual(C);
    const ChoiceModel cm = ChoiceModel::parallel4();
    const int I = 4, J = 4;

    RouteChoiceResult res;
    res.chosen_counts.assign(4, 0);

    Vec m = Vec::Zero(I);
    Vec lambda(I), q(J), d(I);
    Vec acc_m = Vec::Zero(I), acc_d = Vec::Zero(I), acc_w = Vec::Zero(J);
    double kept = 0.0;
    std::vector<double> trend_t, trend_m;
    const double spacing = cfg.sample_spacing > 0 ? cfg.sample_spacing : cfg.T / 2000.0;

    Philox rng(cfg.seed, 0, 12);

    auto metering = [&]() {
        detail::pf_parallel4_core(C.data(), m.data(), lambda.data(), q.data(), d.data());
    };

    if (mode == ArrivalMode::Brownian) {
        const auto steps = static_cast<std::uint64_t>(std::llround(cfg.T / cfg.h));
        const auto burn = static_cast<std::uint64_t>(cfg.burn_in * static_cast<double>(steps));
        const auto sample_stride = std::max<std::uint64_t>(
            1, static_cast<std::uint64_t>(std::llround(spacing / cfg.h)));
        const double sig = std::sqrt(sigma2 * cfg.h);
        const Vec sqrt_rho = rho.cwiseSqrt();

        for (std::uint64_t k = 0; k < steps; ++k) {
            metering();
            if (k >= burn) {
                acc_m += m * cfg.h;
                acc_d += d * cfg.h;
                acc_w += (pr.virtual_.A * m) * cfg.h;
                kept += cfg.h;
                if (k % sample_stride == 0) {
                    trend_t.push_back(static_cast<double>(k) * cfg.h);
                    trend_m.push_back(m.sum());
                }
            }
            if (cfg.record_stride > 0 && k % static_cast<std::uint64_t>(cfg.record_stride) == 0) {
                res.path.t.push_back(static_cast<double>(k) * cfg.h);
                res.path.m.push_back(m);
                res.path.lambda.push_back(lambda);
                res.path.q.push_back(q);
                res.path.d.push_back(d);
            }

            // every source routes this step's increment to its best line
            for (int s = 0; s < 4; ++s) {
                const int line = choose_line(cm.choice_sets[s], d);
                const double de = rho[s] * cfg.h + sqrt_rho[s] * sig * rng.normal();
                m[line] += de;
                ++res.chosen_counts[line];
            }
            m = (m - lambda * cfg.h).cwiseMax(0.0);
        }
    } else {
        const double total_rate = rho.sum();
        double t = 0.0;
        const double burn_t = cfg.burn_in * cfg.T;
        double next_arrival = rng.exponential(total_rate);

        while (t < cfg.T) {
            metering();
            double dt = next_arrival - t;
            int emptying = -1;
            for (int i = 0; i < I; ++i) {
                if (lambda[i] > 0.0 && m[i] > 0.0) {
                    const double te = m[i] / lambda[i];
                    if (te < dt) {
                        dt = te;
                        emptying = i;
                    }
                }
            }
            if (t + dt > cfg.T) dt = cfg.T - t;

            if (t >= burn_t) {
                acc_m += (m - 0.5 * dt * lambda) * dt;
                acc_d += d * dt;
                acc_w += pr.virtual_.A * (m - 0.5 * dt * lambda) * dt;
                kept += dt;
            }
            m = (m - lambda * dt).cwiseMax(0.0);
            t += dt;
            if (t >= cfg.T) break;

            if (emptying >= 0) {
                m[emptying] = 0.0;
                continue;
            }

            // arrival: pick the source, then its cheapest admissible line
            double u = rng.uniform_co() * total_rate;
            int source = 3;
            for (int s = 0; s < 4; ++s) {
                if (u < rho[s]) {
                    source = s;
                    break;
                }
                u -= rho[s];
            }
            const int line = choose_line(cm.choice_sets[source], d);
            m[line] += 1.0;
            ++res.chosen_counts[line];
            trend_t.push_back(t);
            trend_m.push_back(m.sum());
            if (cfg.record_arrivals) res.arrivals.push_back({t, source, line});
            next_arrival = t + rng.exponential(total_rate);
        }
    }

    res.mean_m = kept > 0 ? Vec(acc_m / kept) : Vec(Vec::Zero(I));
    res.mean_d = kept > 0 ? Vec(acc_d / kept) : Vec(Vec::Zero(I));
    res.final_total_m = m.sum();

    // diagnostic virtual duals from averaged virtual workloads (not a paper
    // estimator; reported for inspection only)
    const Mat G = pr.virtual_.A * rho.asDiagonal() * pr.virtual_.A.transpose();
    res.virtual_dual_mean =
        kept > 0 ? Vec(G.fullPivLu().solve(acc_w / kept)) : Vec(Vec::Zero(J));

    std::vector<double> t2, m2;
    for (std::size_t k = 0; k < trend_t.size(); ++k) {
        if (trend_t[k] >= cfg.T / 2) {
            t2.push_back(trend_t[k]);
            m2.push_back(trend_m[k]);
        }
    }
    res.total_m_trend = stats::block_trend(t2, m2);
    return res;
}

}  // namespace fairmeter
