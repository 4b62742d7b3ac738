#include "fairmeter/queue.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "fairmeter/stats.hpp"

namespace fairmeter {

WorkDistribution WorkDistribution::exponential(double mu) {
    if (!(mu > 0)) throw ValidationError("work distribution: mu must be positive");
    WorkDistribution g;
    g.kind = Kind::Exponential;
    g.mean = 1.0 / mu;
    g.second_moment = 2.0 / (mu * mu);
    return g;
}

WorkDistribution WorkDistribution::deterministic(double mean) {
    if (!(mean > 0)) throw ValidationError("work distribution: mean must be positive");
    WorkDistribution g;
    g.kind = Kind::Deterministic;
    g.mean = mean;
    g.second_moment = mean * mean;
    return g;
}

WorkDistribution WorkDistribution::general(std::vector<double> xs, std::vector<double> Fs) {
    if (xs.size() != Fs.size() || xs.size() < 2)
        throw ValidationError("work distribution: cdf table needs matching sizes >= 2");
    if (xs.front() < 0 || Fs.front() != 0.0 || Fs.back() != 1.0)
        throw ValidationError("work distribution: table must start at F=0 and end at F=1");
    for (std::size_t k = 1; k < xs.size(); ++k)
        if (xs[k] <= xs[k - 1] || Fs[k] < Fs[k - 1])
            throw ValidationError("work distribution: table must be increasing");

    WorkDistribution g;
    g.kind = Kind::General;
    g.xs = std::move(xs);
    g.Fs = std::move(Fs);
    // moments of the piecewise-linear cdf (uniform density on each segment)
    double m1 = 0, m2 = 0;
    for (std::size_t k = 1; k < g.xs.size(); ++k) {
        const double p = g.Fs[k] - g.Fs[k - 1];
        const double a = g.xs[k - 1], b = g.xs[k];
        m1 += p * 0.5 * (a + b);
        m2 += p * (a * a + a * b + b * b) / 3.0;
    }
    if (!(m1 > 0)) throw ValidationError("work distribution: mean must be positive");
    g.mean = m1;
    g.second_moment = m2;
    return g;
}

double WorkDistribution::cdf(double x) const {
    if (x < 0) return 0.0;
    switch (kind) {
        case Kind::Exponential: return 1.0 - std::exp(-x / mean);
        case Kind::Deterministic: return x >= mean ? 1.0 : 0.0;
        case Kind::General: {
            if (x <= xs.front()) return x == xs.front() ? Fs.front() : 0.0;
            if (x >= xs.back()) return 1.0;
            const auto it = std::upper_bound(xs.begin(), xs.end(), x);
            const std::size_t k = static_cast<std::size_t>(it - xs.begin());
            const double frac = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
            return Fs[k - 1] + frac * (Fs[k] - Fs[k - 1]);
        }
    }
    return 0.0;
}

double WorkDistribution::sample(Philox& rng) const {
    switch (kind) {
        case Kind::Exponential: return rng.exponential(1.0 / mean);
        case Kind::Deterministic: return mean;
        case Kind::General: {
            const double u = rng.uniform_co();
            const auto it = std::upper_bound(Fs.begin(), Fs.end(), u);
            const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - Fs.begin()),
                                                        Fs.size() - 1);
            const double f0 = Fs[k - 1], f1 = Fs[k];
            const double frac = f1 > f0 ? (u - f0) / (f1 - f0) : 0.0;
            return xs[k - 1] + frac * (xs[k] - xs[k - 1]);
        }
    }
    return mean;
}

double forward_recurrence_cdf(const WorkDistribution& G, double x) {
    if (x <= 0) return 0.0;
    const double mu = G.mu();
    switch (G.kind) {
        case WorkDistribution::Kind::Exponential:
            return 1.0 - std::exp(-mu * x);  // memoryless: G* = G
        case WorkDistribution::Kind::Deterministic:
            return std::min(1.0, mu * x);  // uniform on [0, mean]
        case WorkDistribution::Kind::General: {
            // mu * integral of (1 - G), trapezoid on the table breakpoints
            double acc = 0.0, prev_x = 0.0, prev_s = 1.0;  // survival at 0
            for (std::size_t k = 0; k < G.xs.size(); ++k) {
                const double xk = G.xs[k];
                const double sk = 1.0 - G.Fs[k];
                if (x <= xk) {
                    const double frac = (x - prev_x) / (xk - prev_x);
                    const double sx = prev_s + frac * (sk - prev_s);
                    acc += 0.5 * (prev_s + sx) * (x - prev_x);
                    return std::min(1.0, mu * acc);
                }
                acc += 0.5 * (prev_s + sk) * (xk - prev_x);
                prev_x = xk;
                prev_s = sk;
            }
            return 1.0;  // survival is zero beyond the table
        }
    }
    return 0.0;
}

double GeometricLaw::pmf(int n) const {
    if (n < 0) return 0.0;
    return (1.0 - rho) * std::pow(rho, n);
}

double GeometricLaw::cdf(int n) const {
    if (n < 0) return 0.0;
    return 1.0 - std::pow(rho, n + 1);
}

GeometricLaw mm1_stationary(double rho) {
    if (rho >= 1.0) throw UnstableLoad("mm1: requires rho < 1");
    if (rho < 0.0) throw ValidationError("mm1: rho must be nonnegative");
    return GeometricLaw{rho};
}

double rbm1_stationary_mean(double rho, double sigma2) {
    if (rho >= 1.0) throw UnstableLoad("rbm: requires rho < 1");
    return rho * sigma2 / (2.0 * (1.0 - rho));
}

QueueSimResult simulate_mm1(double nu, double mu, std::uint64_t n_events, std::uint64_t seed,
                            const QueueSimOptions& opts) {
    if (!(nu >= 0) || !(mu > 0)) throw ValidationError("mm1: need nu >= 0, mu > 0");

    Philox arrivals(seed, 0, 1);
    Philox works(seed, 0, 2);

    QueueSimResult res;
    stats::CountHistogram hist;
    stats::TimeAverage wavg;
    std::vector<double> batch_int, batch_time;
    if (opts.n_batches > 0) {
        batch_int.assign(opts.n_batches, 0.0);
        batch_time.assign(opts.n_batches, 0.0);
    }

    std::deque<double> jobs;  // remaining work, front in service
    double t = 0.0, W = 0.0, U = 0.0;
    for (int k = 0; k < opts.initial_count; ++k) {
        const double s0 = works.exponential(mu);
        jobs.push_back(s0);
        W += s0;
    }
    double next_arrival = nu > 0 ? arrivals.exponential(nu) : -1.0;
    const std::uint64_t burn_events =
        static_cast<std::uint64_t>(opts.burn_in * static_cast<double>(n_events));

    auto maybe_record = [&](std::uint64_t ev) {
        if (opts.record_stride > 0 && ev % static_cast<std::uint64_t>(opts.record_stride) == 0) {
            res.path.t.push_back(t);
            res.path.W.push_back(W);
            res.path.N.push_back(static_cast<int>(jobs.size()));
            res.path.U.push_back(U);
        }
    };
    maybe_record(0);

    for (std::uint64_t ev = 0; ev < n_events; ++ev) {
        const bool busy = !jobs.empty();
        const double to_departure = busy ? std::max(0.0, jobs.front()) : -1.0;
        double dt;
        bool is_arrival;
        if (nu > 0 && (!busy || next_arrival - t <= to_departure)) {
            dt = next_arrival - t;
            is_arrival = true;
        } else if (busy) {
            dt = to_departure;
            is_arrival = false;
        } else {
            break;  // nu == 0 and empty: nothing ever happens again
        }

        if (ev >= burn_events) {
            hist.add(static_cast<int>(jobs.size()), dt);
            wavg.add_trapezoid(W, busy ? W - dt : W, dt);
            if (opts.n_batches > 0) {
                const auto b = std::min<std::uint64_t>(
                    opts.n_batches - 1,
                    (ev - burn_events) * opts.n_batches / (n_events - burn_events));
                batch_int[b] += static_cast<double>(jobs.size()) * dt;
                batch_time[b] += dt;
            }
        }
        t += dt;
        if (busy) {
            jobs.front() -= dt;
            W -= dt;
        } else {
            U += dt;
        }

        if (is_arrival) {
            const double s = works.exponential(mu);
            jobs.push_back(s);
            W += s;
            next_arrival = t + arrivals.exponential(nu);
        } else {
            jobs.pop_front();
        }
        maybe_record(ev + 1);
        res.events = ev + 1;
    }

    res.count_pmf = hist.pmf();
    res.mean_count = hist.mean();
    res.mean_workload = wavg.mean();
    res.total_time = t;
    for (std::size_t b = 0; b < batch_int.size(); ++b)
        if (batch_time[b] > 0) res.batch_means.push_back(batch_int[b] / batch_time[b]);
    return res;
}

QueueSimResult simulate_mg1_ps(double nu, const WorkDistribution& G, double T,
                               std::uint64_t seed, const QueueSimOptions& opts) {
    if (!(nu > 0)) throw ValidationError("mg1ps: need nu > 0");
    const double rho = nu * G.mean;
    if (rho >= 1.0) throw UnstableLoad("mg1ps: rho = nu E(S) must be < 1");

    Philox arrivals(seed, 0, 1);
    Philox works(seed, 0, 2);

    // Residuals are stored as thresholds r + D where D is the cumulative
    // per-customer service; D advances at rate 1/n and resets on idle.
    std::multiset<double> thresholds;
    double D = 0.0, sum_thresholds = 0.0;

    QueueSimResult res;
    stats::CountHistogram hist;
    stats::TimeAverage wavg;

    const double burn_t = opts.burn_in * T;
    const double spacing = opts.sample_spacing > 0
                               ? opts.sample_spacing
                               : std::max(1.0, 2.0 * G.mean / std::max(1e-9, 1.0 - rho));
    double next_sample = burn_t;

    double t = 0.0, U = 0.0;
    double next_arrival = arrivals.exponential(nu);

    auto workload = [&]() {
        return sum_thresholds - static_cast<double>(thresholds.size()) * D;
    };
    auto maybe_record = [&](std::uint64_t ev) {
        if (opts.record_stride > 0 && ev % static_cast<std::uint64_t>(opts.record_stride) == 0) {
            res.path.t.push_back(t);
            res.path.W.push_back(workload());
            res.path.N.push_back(static_cast<int>(thresholds.size()));
            res.path.U.push_back(U);
        }
    };
    maybe_record(0);

    std::uint64_t ev = 0;
    while (t < T) {
        const std::size_t n = thresholds.size();
        const double to_departure =
            n > 0 ? std::max(0.0, (*thresholds.begin() - D) * static_cast<double>(n)) : -1.0;
        double dt;
        int what;  // 0 arrival, 1 departure, 2 sample epoch
        if (n == 0 || next_arrival - t <= to_departure) {
            dt = next_arrival - t;
            what = 0;
        } else {
            dt = to_departure;
            what = 1;
        }
        if (t + dt > next_sample) {
            dt = next_sample - t;
            what = 2;
        }
        if (t + dt > T) break;

        if (t >= burn_t) {
            hist.add(static_cast<int>(n), dt);
            wavg.add_trapezoid(workload(), workload() - (n > 0 ? dt : 0.0), dt);
        }
        t += dt;
        if (n > 0) {
            D += dt / static_cast<double>(n);
        } else {
            U += dt;
        }

        switch (what) {
            case 0: {
                const double s = G.sample(works);
                thresholds.insert(s + D);
                sum_thresholds += s + D;
                next_arrival = t + arrivals.exponential(nu);
                break;
            }
            case 1: {
                sum_thresholds -= *thresholds.begin();
                thresholds.erase(thresholds.begin());
                if (thresholds.empty()) {
                    D = 0.0;  // renormalise to keep thresholds well conditioned
                    sum_thresholds = 0.0;
                }
                break;
            }
            case 2: {
                std::vector<double> group;
                for (double th : thresholds) {
                    res.residual_samples.push_back(th - D);
                    if (opts.record_residual_groups) group.push_back(th - D);
                }
                if (opts.record_residual_groups) res.residual_groups.push_back(std::move(group));
                next_sample += spacing;
                break;
            }
        }
        maybe_record(++ev);
    }

    res.events = ev;
    res.count_pmf = hist.pmf();
    res.mean_count = hist.mean();
    res.mean_workload = wavg.mean();
    res.total_time = t;
    return res;
}

QueuePath rbm1_path(double rho, double sigma2, double T, double h, std::uint64_t seed,
                    double W0, int record_stride) {
    if (!(h > 0) || !(T > 0)) throw ValidationError("rbm: need positive T and h");
    Philox rng(seed, 0, 3);

    const std::uint64_t steps = static_cast<std::uint64_t>(T / h);
    const double drift = -(1.0 - rho) * h;
    const double diff = std::sqrt(std::max(0.0, rho * sigma2 * h));

    QueuePath path;
    double X = 0.0, M = 0.0;  // running free process and max(0, max -W0 - X)
    auto record = [&](std::uint64_t k) {
        if (record_stride > 0 && k % static_cast<std::uint64_t>(record_stride) == 0) {
            path.t.push_back(static_cast<double>(k) * h);
            path.W.push_back(W0 + X + M);
            path.N.push_back(0);
            path.U.push_back(M);
        }
    };
    record(0);
    for (std::uint64_t k = 1; k <= steps; ++k) {
        X += drift + diff * rng.normal();
        M = std::max(M, -W0 - X);
        record(k);
    }
    return path;
}

double rbm1_time_average(double rho, double sigma2, double T, double h, std::uint64_t seed,
                         double W0, double burn_in) {
    if (!(h > 0) || !(T > 0)) throw ValidationError("rbm: need positive T and h");
    Philox rng(seed, 0, 3);

    const std::uint64_t steps = static_cast<std::uint64_t>(T / h);
    const std::uint64_t burn = static_cast<std::uint64_t>(burn_in * static_cast<double>(steps));
    const double drift = -(1.0 - rho) * h;
    const double diff = std::sqrt(std::max(0.0, rho * sigma2 * h));

    double X = 0.0, M = 0.0, acc = 0.0;
    std::uint64_t kept = 0;
    for (std::uint64_t k = 1; k <= steps; ++k) {
        X += drift + diff * rng.normal();
        M = std::max(M, -W0 - X);
        if (k > burn) {
            acc += W0 + X + M;
            ++kept;
        }
    }
    return kept > 0 ? acc / static_cast<double>(kept) : 0.0;
}

QueuePath scale_workload(const QueuePath& path, double rho) {
    if (rho >= 1.0) throw UnstableLoad("scale: requires rho < 1");
    const double space = 1.0 - rho;
    const double time = space * space;
    QueuePath out = path;
    for (auto& x : out.t) x *= time;
    for (auto& x : out.W) x *= space;
    for (auto& x : out.U) x *= space;
    return out;
}

}  // namespace fairmeter
