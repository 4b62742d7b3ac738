#include "fairmeter/motorway.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>

namespace fairmeter {

Vec brownian_inflows(const TrafficParams& params, double h, Philox& rng) {
    const int I = static_cast<int>(params.rho.size());
    Vec de(I);
    const double sig = std::sqrt(params.sigma2 * h);
    for (int i = 0; i < I; ++i)
        de[i] = params.rho[i] * h + std::sqrt(params.rho[i]) * sig * rng.normal();
    return de;
}

PfRates pf_rates(const Network& net, const Vec& m) {
    if (m.size() != net.num_routes())
        throw ValidationError("pf_rates: m length must equal route count");
    if ((m.array() < 0).any()) throw ValidationError("pf_rates: m must be nonnegative");
    switch (net.topology) {
        case Topology::Linear: return pf_linear(net.C, m);
        case Topology::Parallel4: return pf_parallel4(net.C, m);
        default: {
            const Allocation a = allocate(net, m);
            return PfRates{a.lambda, a.q, net.A.transpose() * a.q, a.objective};
        }
    }
}

Vec upstream_priority_rates(const Network& net, const Vec& m, const Vec& inflow_allowance) {
    const int J = net.num_resources();
    if (net.topology != Topology::Linear)
        throw NotLinearNetwork("upstream policy is defined for the linear network only");
    if (m.size() != J) throw ValidationError("upstream: m length must equal section count");

    Vec lambda = Vec::Zero(J);
    double used = 0.0;  // flow already granted to more upstream lines
    for (int i = J - 1; i >= 0; --i) {
        const double bound = std::max(0.0, net.C[i] - used);
        if (m[i] > 0.0)
            lambda[i] = bound;
        else if (inflow_allowance.size() == J)
            lambda[i] = std::min(bound, std::max(0.0, inflow_allowance[i]));
        used += lambda[i];
    }
    return lambda;
}

Vec downstream_priority_rates(const Network& net, const Vec& m) {
    const int J = net.num_resources();
    if (net.topology != Topology::Linear)
        throw NotLinearNetwork("downstream policy is defined for the linear network only");
    if (m.size() != J) throw ValidationError("downstream: m length must equal section count");

    Vec lambda = Vec::Zero(J);
    for (int i = 0; i < J; ++i) {
        if (m[i] > 0.0) {
            lambda[i] = net.C[i];
            break;
        }
    }
    return lambda;
}

StationaryLaw stationary_law(const Network& net, const TrafficParams& params) {
    StationaryLaw law;
    if (!(params.sigma2 > 0))
        throw ValidationError("stationary law: needs sigma2 > 0");
    const Vec margins = net.C - net.A * params.rho;
    if (margins.minCoeff() <= 0.0)
        throw UnstableLoad("stationary law: needs C - A rho > 0");
    law.zeta = 2.0 / params.sigma2 * margins;
    law.mean_q = law.zeta.cwiseInverse();
    law.mean_d = net.A.transpose() * law.mean_q;
    law.var_d = net.A.transpose() * law.mean_q.cwiseProduct(law.mean_q);
    law.mean_m = params.rho.cwiseProduct(law.mean_d);
    law.var_m = params.rho.cwiseProduct(params.rho).cwiseProduct(law.var_d);
    return law;
}

Mat delay_quantiles(const StationaryLaw& law, const Network& net,
                    const std::vector<double>& probs, int n_samples, std::uint64_t seed) {
    const int I = net.num_routes();
    const int J = net.num_resources();
    Philox rng(seed, 0, 6);
    std::vector<std::vector<double>> draws(I);
    Vec q(J);
    for (int s = 0; s < n_samples; ++s) {
        for (int j = 0; j < J; ++j) q[j] = rng.exponential(law.zeta[j]);
        const Vec d = net.A.transpose() * q;
        for (int i = 0; i < I; ++i) draws[i].push_back(d[i]);
    }
    Mat out(probs.size(), I);
    for (int i = 0; i < I; ++i)
        for (std::size_t p = 0; p < probs.size(); ++p)
            out(static_cast<int>(p), i) = stats::quantile(draws[i], probs[p]);
    return out;
}

Vec nominal_delays(const Network& net, const Vec& q) { return delays_from_duals(net, q); }

Network collapsed_network(const Network& net, int resource) {
    const int J = net.num_resources();
    if (resource < 0 || resource >= J)
        throw ValidationError("collapse: resource index out of range");
    if (net.topology != Topology::Linear)
        throw NotLinearNetwork("collapse is defined relative to the linear network");

    Mat A(J - 1, net.num_routes());
    Vec C(J - 1);
    int r = 0;
    for (int j = 0; j < J; ++j) {
        if (j == resource) continue;
        A.row(r) = net.A.row(j);
        C[r] = net.C[j];
        ++r;
    }
    Network out = validate(A, C);
    out.topology = Topology::General;
    return out;
}

bool first_strategy_cone_check(const Vec& w, double tol) {
    const int J = static_cast<int>(w.size());
    if (J == 0) return true;
    if (w[J - 1] < -tol) return false;
    for (int j = J - 2; j >= 0; --j)
        if (w[j] < w[j + 1] - tol) return false;
    return true;
}

namespace {

struct RepOutput {
    MotorwayRepStats stats;
    MotorwayPath path;
};

// Policy evaluation shared by both modes. `allowance` is only consulted by
// the upstream policy (pass-through rate for empty lines); event mode passes
// an empty vector so empty lines idle until the next job lands.
class PolicyEngine {
public:
    PolicyEngine(const Network& net, PolicyKind kind)
        : net_(net), kind_(kind), J_(net.num_resources()), I_(net.num_routes()) {
        lambda_ = Vec::Zero(I_);
        q_ = Vec::Zero(J_);
        d_ = Vec::Zero(I_);
        if (kind_ == PolicyKind::ProportionalFair && net_.topology == Topology::General)
            solver_.emplace(net_);
        wb_.resize(J_);
        wc_.resize(J_);
        ws_.resize(J_);
    }

    void rates(const Vec& m, const Vec& allowance) {
        switch (kind_) {
            case PolicyKind::ProportionalFair:
                if (net_.topology == Topology::Linear) {
                    detail::pf_linear_core(net_.C.data(), m.data(), J_, lambda_.data(),
                                           q_.data(), d_.data(), wb_.data(), wc_.data(),
                                           ws_.data());
                } else if (net_.topology == Topology::Parallel4) {
                    detail::pf_parallel4_core(net_.C.data(), m.data(), lambda_.data(), q_.data(),
                                              d_.data());
                } else {
                    const Allocation& a = solver_->solve(m);
                    lambda_ = a.lambda;
                    q_ = a.q;
                    d_ = net_.A.transpose() * q_;
                }
                break;
            case PolicyKind::UpstreamPriority:
                lambda_ = upstream_priority_rates(net_, m, allowance);
                q_.setZero();
                d_.setZero();
                break;
            case PolicyKind::DownstreamPriority:
                lambda_ = downstream_priority_rates(net_, m);
                q_.setZero();
                d_.setZero();
                break;
        }
    }

    const Vec& lambda() const { return lambda_; }
    const Vec& q() const { return q_; }
    const Vec& d() const { return d_; }
    bool has_duals() const { return kind_ == PolicyKind::ProportionalFair; }

private:
    const Network& net_;
    PolicyKind kind_;
    int J_, I_;
    Vec lambda_, q_, d_;
    std::optional<PfSolver> solver_;
    std::vector<double> wb_, wc_;
    std::vector<int> ws_;
};

RepOutput run_brownian(const Network& net, const TrafficParams& params, PolicyKind policy,
                       const MotorwaySimConfig& cfg, int rep) {
    const int J = net.num_resources();
    const int I = net.num_routes();
    Philox rng(cfg.seed, static_cast<std::uint64_t>(rep), 10);
    PolicyEngine engine(net, policy);

    const auto steps = static_cast<std::uint64_t>(std::llround(cfg.T / cfg.h));
    const auto burn = static_cast<std::uint64_t>(cfg.burn_in * static_cast<double>(steps));
    const double spacing = cfg.sample_spacing > 0 ? cfg.sample_spacing : cfg.T / 2000.0;
    const auto sample_stride =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(spacing / cfg.h)));

    Vec m = cfg.initial_m.size() == I ? cfg.initial_m : Vec(Vec::Zero(I));
    Vec de(I), allowance(I);
    Vec acc_m = Vec::Zero(I), acc_d = Vec::Zero(I), acc_q = Vec::Zero(J);
    Vec acc_use = Vec::Zero(J);
    Vec cum_unused = Vec::Zero(J);
    double kept = 0.0;

    RepOutput out;
    out.stats.q_samples.resize(J);
    std::vector<double> trend_t, trend_m;

    const double sig = std::sqrt(params.sigma2 * cfg.h);
    Vec sqrt_rho = params.rho.cwiseSqrt();

    for (std::uint64_t k = 0; k < steps; ++k) {
        for (int i = 0; i < I; ++i)
            de[i] = params.rho[i] * cfg.h + sqrt_rho[i] * sig * rng.normal();
        for (int i = 0; i < I; ++i) allowance[i] = std::max(0.0, de[i]) / cfg.h;
        engine.rates(m, allowance);
        const Vec& lambda = engine.lambda();

        const Vec usage = net.A * lambda;
        out.stats.max_capacity_violation =
            std::max(out.stats.max_capacity_violation, (usage - net.C).maxCoeff());
        cum_unused += (net.C - usage) * cfg.h;

        if (k >= burn) {
            acc_m += m * cfg.h;
            acc_d += engine.d() * cfg.h;
            acc_q += engine.q() * cfg.h;
            acc_use += usage * cfg.h;
            kept += cfg.h;
            if (k % sample_stride == 0) {
                if (engine.has_duals())
                    for (int j = 0; j < J; ++j) out.stats.q_samples[j].push_back(engine.q()[j]);
                trend_t.push_back(static_cast<double>(k) * cfg.h);
                trend_m.push_back(m.sum());
            }
        }
        if (rep == 0 && cfg.record_stride > 0 &&
            k % static_cast<std::uint64_t>(cfg.record_stride) == 0) {
            out.path.t.push_back(static_cast<double>(k) * cfg.h);
            out.path.m.push_back(m);
            out.path.lambda.push_back(lambda);
            out.path.q.push_back(engine.q());
            out.path.d.push_back(engine.d());
            out.path.unused.push_back(cum_unused);
        }

        m = (m + de - lambda * cfg.h).cwiseMax(0.0);
    }

    out.stats.mean_m = kept > 0 ? Vec(acc_m / kept) : Vec(Vec::Zero(I));
    out.stats.mean_d = kept > 0 ? Vec(acc_d / kept) : Vec(Vec::Zero(I));
    out.stats.mean_q = kept > 0 ? Vec(acc_q / kept) : Vec(Vec::Zero(J));
    out.stats.utilization =
        kept > 0 ? Vec((acc_use / kept).cwiseQuotient(net.C)) : Vec(Vec::Zero(J));
    out.stats.final_total_m = m.sum();

    // trend over the last half of the sampled grid
    std::vector<double> t2, m2;
    for (std::size_t k = 0; k < trend_t.size(); ++k) {
        if (trend_t[k] >= cfg.T / 2) {
            t2.push_back(trend_t[k]);
            m2.push_back(trend_m[k]);
        }
    }
    out.stats.total_m_trend = stats::block_trend(t2, m2);
    return out;
}

RepOutput run_poisson(const Network& net, const TrafficParams& params, PolicyKind policy,
                      const MotorwaySimConfig& cfg, int rep) {
    const int J = net.num_resources();
    const int I = net.num_routes();
    Philox rng(cfg.seed, static_cast<std::uint64_t>(rep), 11);
    PolicyEngine engine(net, policy);

    const double total_rate = params.rho.sum();
    if (!(total_rate > 0)) throw ValidationError("poisson mode: needs positive loads");

    Vec m = cfg.initial_m.size() == I ? cfg.initial_m : Vec(Vec::Zero(I));
    Vec empty_allowance;  // jobs arrive atomically: no pass-through for empty lines
    double t = 0.0;
    const double burn_t = cfg.burn_in * cfg.T;

    Vec acc_m = Vec::Zero(I), acc_d = Vec::Zero(I), acc_q = Vec::Zero(J);
    Vec acc_use = Vec::Zero(J);
    Vec cum_unused = Vec::Zero(J);
    double kept = 0.0;

    RepOutput out;
    out.stats.q_samples.resize(J);
    const double spacing = cfg.sample_spacing > 0 ? cfg.sample_spacing : cfg.T / 2000.0;
    double next_sample = burn_t;

    double next_arrival = t + rng.exponential(total_rate);
    std::uint64_t events = 0;

    while (t < cfg.T) {
        engine.rates(m, empty_allowance);
        const Vec& lambda = engine.lambda();

        const Vec usage = net.A * lambda;
        out.stats.max_capacity_violation =
            std::max(out.stats.max_capacity_violation, (usage - net.C).maxCoeff());

        // next event: arrival, a line running empty, or the sampling grid
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
        bool is_sample = false;
        if (t + dt > next_sample && next_sample <= cfg.T) {
            dt = next_sample - t;
            emptying = -1;
            is_sample = true;
        }
        if (t + dt > cfg.T) dt = cfg.T - t;

        // piecewise-linear segment statistics (exact integrals)
        if (t >= burn_t) {
            acc_m += (m - 0.5 * dt * lambda) * dt;
            acc_d += engine.d() * dt;
            acc_q += engine.q() * dt;
            acc_use += usage * dt;
            kept += dt;
        }
        cum_unused += (net.C - usage) * dt;
        m -= lambda * dt;
        m = m.cwiseMax(0.0);
        t += dt;
        if (t >= cfg.T) break;

        if (is_sample) {
            if (engine.has_duals())
                for (int j = 0; j < J; ++j) out.stats.q_samples[j].push_back(engine.q()[j]);
            next_sample += spacing;
            continue;
        }
        if (emptying >= 0) {
            m[emptying] = 0.0;
            continue;
        }

        // arrival: record the pre-arrival total for cross-policy comparisons
        if (cfg.record_events) {
            out.stats.event_t.push_back(t);
            out.stats.event_total_m.push_back(m.sum());
        }
        double u = rng.uniform_co() * total_rate;
        int route = I - 1;
        for (int i = 0; i < I; ++i) {
            if (u < params.rho[i]) {
                route = i;
                break;
            }
            u -= params.rho[i];
        }
        m[route] += 1.0;
        next_arrival = t + rng.exponential(total_rate);
        ++events;

        if (rep == 0 && cfg.record_stride > 0 &&
            events % static_cast<std::uint64_t>(cfg.record_stride) == 0) {
            out.path.t.push_back(t);
            out.path.m.push_back(m);
            out.path.lambda.push_back(lambda);
            out.path.q.push_back(engine.q());
            out.path.d.push_back(engine.d());
            out.path.unused.push_back(cum_unused);
        }
    }

    out.stats.mean_m = kept > 0 ? Vec(acc_m / kept) : Vec(Vec::Zero(I));
    out.stats.mean_d = kept > 0 ? Vec(acc_d / kept) : Vec(Vec::Zero(I));
    out.stats.mean_q = kept > 0 ? Vec(acc_q / kept) : Vec(Vec::Zero(J));
    out.stats.utilization =
        kept > 0 ? Vec((acc_use / kept).cwiseQuotient(net.C)) : Vec(Vec::Zero(J));
    out.stats.final_total_m = m.sum();

    std::vector<double> t2, m2;
    for (std::size_t k = 0; k < out.stats.event_t.size(); ++k) {
        if (out.stats.event_t[k] >= cfg.T / 2) {
            t2.push_back(out.stats.event_t[k]);
            m2.push_back(out.stats.event_total_m[k]);
        }
    }
    out.stats.total_m_trend = stats::block_trend(t2, m2);
    return out;
}

}  // namespace

MotorwayResult simulate_motorway(const Network& net, const TrafficParams& params,
                                 PolicyKind policy, ArrivalMode mode,
                                 const MotorwaySimConfig& cfg) {
    if (params.rho.size() != net.num_routes())
        throw ValidationError("simulate: traffic dimensions must match the network");

    const int reps = std::max(1, cfg.replications);
    std::vector<RepOutput> outs(reps);
    auto run_one = [&](int r) {
        outs[r] = mode == ArrivalMode::Brownian ? run_brownian(net, params, policy, cfg, r)
                                                : run_poisson(net, params, policy, cfg, r);
    };

    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, reps);
    if (threads <= 1 || reps == 1) {
        for (int r = 0; r < reps; ++r) run_one(r);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&, w]() {
                for (int r = w; r < reps; r += threads) run_one(r);
            });
        for (auto& th : pool) th.join();
    }

    MotorwayResult res;
    res.mean_m = Vec::Zero(net.num_routes());
    res.mean_d = Vec::Zero(net.num_routes());
    res.mean_q = Vec::Zero(net.num_resources());
    res.utilization = Vec::Zero(net.num_resources());
    for (int r = 0; r < reps; ++r) {
        res.mean_m += outs[r].stats.mean_m;
        res.mean_d += outs[r].stats.mean_d;
        res.mean_q += outs[r].stats.mean_q;
        res.utilization += outs[r].stats.utilization;
        res.reps.push_back(std::move(outs[r].stats));
    }
    res.mean_m /= reps;
    res.mean_d /= reps;
    res.mean_q /= reps;
    res.utilization /= reps;
    res.path = std::move(outs[0].path);
    return res;
}

}  // namespace fairmeter
