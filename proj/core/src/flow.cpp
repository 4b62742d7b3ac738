#include "fairmeter/flow.hpp"

#include <cmath>
#include <cstring>
#include <unordered_map>

#include "fairmeter/rng.hpp"

namespace fairmeter {

Vec workload_of(const Network& net, const TrafficParams& params, const Vec& n) {
    if (n.size() != net.num_routes())
        throw ValidationError("workload: n length must equal route count");
    return net.A * (n.array() / params.mu.array()).matrix();
}

ApproxLaw approx_stationary(const Network& net, const TrafficParams& params) {
    ApproxLaw law;
    law.rates = net.C - net.A * params.rho;
    if (law.rates.minCoeff() <= 0.0)
        throw UnstableLoad("approx: stationary law needs C - A rho > 0");
    const Vec inv = law.rates.cwiseInverse();
    const Vec inv2 = inv.cwiseProduct(inv);
    law.mean_n = params.rho.cwiseProduct(net.A.transpose() * inv);
    law.var_n = params.rho.cwiseProduct(params.rho).cwiseProduct(net.A.transpose() * inv2);
    return law;
}

namespace {

struct StateKeyHash {
    std::size_t operator()(const std::vector<int>& v) const {
        std::size_t h = 1469598103934665603ull;
        for (int x : v) {
            h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return h;
    }
};

}  // namespace

CtmcResult simulate_ctmc(const Network& net, const TrafficParams& params,
                         std::uint64_t n_events, std::uint64_t seed, const CtmcOptions& opts) {
    const int I = net.num_routes();
    if (params.nu.size() != I)
        throw ValidationError("ctmc: traffic dimensions must match the network");

    Philox rng(seed, 0, 4);
    std::vector<int> state(I, 0);
    if (!opts.initial.empty()) {
        if (static_cast<int>(opts.initial.size()) != I)
            throw ValidationError("ctmc: initial state has wrong dimension");
        state = opts.initial;
    }
    Vec n = Vec::Zero(I);
    for (int i = 0; i < I; ++i) n[i] = state[i];

    std::unordered_map<std::vector<int>, Vec, StateKeyHash> cache;
    CtmcResult res;
    res.mean_n = Vec::Zero(I);
    res.mean_w = Vec::Zero(net.num_resources());
    if (opts.track_histograms) res.histograms.resize(I);

    Vec lambda = Vec::Zero(I);
    auto rates_for = [&](const std::vector<int>& key) -> Vec {
        if (auto it = cache.find(key); it != cache.end()) {
            ++res.cache_hits;
            return it->second;
        }
        ++res.cache_misses;
        Vec lam = allocate(net, n).lambda;
        if (cache.size() < opts.cache_limit) cache.emplace(key, lam);
        return lam;
    };
    if (n.maxCoeff() > 0) lambda = rates_for(state);

    const std::uint64_t burn = static_cast<std::uint64_t>(opts.burn_in * double(n_events));
    double t = 0.0, kept_time = 0.0;
    Vec acc_n = Vec::Zero(I);
    Vec acc_w = Vec::Zero(net.num_resources());
    const Vec inv_mu = params.mu.cwiseInverse();

    for (std::uint64_t ev = 0; ev < n_events; ++ev) {
        const double nu_total = params.nu.sum();
        double dep_total = 0.0;
        Vec dep(I);
        for (int i = 0; i < I; ++i) {
            dep[i] = params.mu[i] * lambda[i];
            dep_total += dep[i];
        }
        const double total = nu_total + dep_total;
        if (total <= 0.0) break;  // absorbed: no arrivals possible, system empty

        const double dt = rng.exponential(total);
        if (ev >= burn) {
            acc_n += n * dt;
            acc_w += (net.A * inv_mu.cwiseProduct(n)) * dt;
            kept_time += dt;
            if (opts.track_histograms)
                for (int i = 0; i < I; ++i) res.histograms[i].add(state[i], dt);
        }
        t += dt;

        double u = rng.uniform_co() * total;
        int route = -1;
        bool arrival = true;
        for (int i = 0; i < I; ++i) {
            if (u < params.nu[i]) { route = i; break; }
            u -= params.nu[i];
        }
        if (route < 0) {
            arrival = false;
            for (int i = 0; i < I; ++i) {
                if (u < dep[i]) { route = i; break; }
                u -= dep[i];
            }
            if (route < 0) route = I - 1;  // guard against roundoff at the boundary
        }

        state[route] += arrival ? 1 : -1;
        n[route] = state[route];
        lambda = rates_for(state);

        if (opts.record_stride > 0 && (ev + 1) % std::uint64_t(opts.record_stride) == 0) {
            res.path.t.push_back(t);
            res.path.n.push_back(n);
            res.path.w.push_back(net.A * inv_mu.cwiseProduct(n));
            res.path.lambda.push_back(lambda);
        }
        res.events = ev + 1;
    }

    if (kept_time > 0) {
        res.mean_n = acc_n / kept_time;
        res.mean_w = acc_w / kept_time;
    }
    res.total_time = t;
    return res;
}

FluidResult integrate_fluid(const Network& net, const TrafficParams& params, const Vec& n0,
                            double T, double h, const FluidOptions& opts) {
    if (!(h > 0) || !(T > 0)) throw ValidationError("fluid: need positive T and h");
    if (n0.size() != net.num_routes() || (n0.array() < 0).any())
        throw ValidationError("fluid: n0 must be nonnegative with route dimension");

    PfSolver solver(net);
    DeltaQp lift(net, params);
    const auto w_of = [&](const Vec& n) {
        return Vec(net.A * (n.array() / params.mu.array()).matrix());
    };

    FluidResult res;
    Vec n = n0;
    const auto steps = static_cast<std::uint64_t>(std::llround(T / h));

    double prev_gap = 0.0;
    bool have_gap = false;
    res.max_lyapunov_increase = -std::numeric_limits<double>::infinity();

    auto gap_at = [&](const Vec& x) {
        const Vec delta = lift.solve(w_of(x));
        return std::make_pair(lyapunov_F(params, x) - lyapunov_F(params, delta),
                              (x - delta).lpNorm<Eigen::Infinity>());
    };

    for (std::uint64_t k = 0; k <= steps; ++k) {
        double dist = 0.0;
        if (opts.track_lyapunov) {
            const auto [gap, d] = gap_at(n);
            dist = d;
            if (have_gap) res.max_lyapunov_increase = std::max(res.max_lyapunov_increase, gap - prev_gap);
            prev_gap = gap;
            have_gap = true;
            res.terminal_lyapunov_gap = gap;
        }
        if (opts.record_stride > 0 && k % std::uint64_t(opts.record_stride) == 0) {
            res.t.push_back(double(k) * h);
            res.n.push_back(n);
            res.manifold_distance.push_back(dist);
        }
        if (k == steps) break;

        const Vec& lambda = solver.solve(n).lambda;
        n = (n + h * (params.nu - params.mu.cwiseProduct(lambda))).cwiseMax(0.0);
    }

    res.terminal_n = n;
    if (opts.track_lyapunov) {
        const Vec delta = lift.solve(w_of(n));
        res.terminal_manifold_distance = (n - delta).lpNorm<Eigen::Infinity>();
    }
    if (!std::isfinite(res.max_lyapunov_increase)) res.max_lyapunov_increase = 0.0;
    return res;
}

}  // namespace fairmeter
