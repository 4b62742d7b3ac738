#include "fairmeter/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fairmeter::stats {

double Moments::std_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

void CountHistogram::add(int state, double dt) {
    if (state < 0) throw std::invalid_argument("CountHistogram: negative state");
    if (static_cast<std::size_t>(state) >= weight_.size()) weight_.resize(state + 1, 0.0);
    weight_[state] += dt;
    total_ += dt;
}

std::vector<double> CountHistogram::pmf() const {
    std::vector<double> p(weight_.size(), 0.0);
    if (total_ <= 0) return p;
    for (std::size_t i = 0; i < weight_.size(); ++i) p[i] = weight_[i] / total_;
    return p;
}

double CountHistogram::mean() const {
    if (total_ <= 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < weight_.size(); ++i) s += static_cast<double>(i) * weight_[i];
    return s / total_;
}

double total_variation(const std::vector<double>& empirical,
                       const std::function<double(int)>& model_pmf, int n_max) {
    double tv = 0.0;
    double emp_tail = 1.0, model_tail = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        const double e = n < static_cast<int>(empirical.size()) ? empirical[n] : 0.0;
        const double m = model_pmf(n);
        tv += std::abs(e - m);
        emp_tail -= e;
        model_tail -= m;
    }
    tv += std::abs(emp_tail - model_tail);
    return 0.5 * tv;
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) return 0.0;
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    return d;
}

double quantile(std::vector<double> samples, double p) {
    if (samples.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(samples.begin(), samples.end());
    const double idx = p * static_cast<double>(samples.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, samples.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return samples[lo] * (1.0 - frac) + samples[hi] * frac;
}

TrendReport block_trend(const std::vector<double>& t, const std::vector<double>& v,
                        int n_blocks) {
    TrendReport rep;
    if (t.size() != v.size() || t.size() < 2 || n_blocks < 3) return rep;
    const double t0 = t.front(), t1 = t.back();
    if (!(t1 > t0)) return rep;

    std::vector<double> sum(n_blocks, 0.0), cnt(n_blocks, 0.0), center(n_blocks, 0.0);
    const double width = (t1 - t0) / n_blocks;
    for (std::size_t k = 0; k < t.size(); ++k) {
        int b = static_cast<int>((t[k] - t0) / width);
        b = std::clamp(b, 0, n_blocks - 1);
        sum[b] += v[k];
        cnt[b] += 1.0;
    }
    std::vector<double> xs, ys;
    for (int b = 0; b < n_blocks; ++b) {
        if (cnt[b] == 0) continue;
        xs.push_back(t0 + (b + 0.5) * width);
        ys.push_back(sum[b] / cnt[b]);
    }
    const int m = static_cast<int>(xs.size());
    rep.blocks = m;
    if (m < 3) return rep;

    double mx = 0, my = 0;
    for (int i = 0; i < m; ++i) { mx += xs[i]; my += ys[i]; }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0) return rep;
    rep.slope = sxy / sxx;
    double sse = 0;
    for (int i = 0; i < m; ++i) {
        const double r = ys[i] - my - rep.slope * (xs[i] - mx);
        sse += r * r;
    }
    const double se2 = sse / (m - 2) / sxx;
    rep.t_stat = se2 > 0 ? rep.slope / std::sqrt(se2) : (rep.slope == 0 ? 0.0 : 1e30);
    return rep;
}

double autocorrelation_time(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 10) return 1.0;
    double mean = 0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double x : series) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    if (var <= 0) return 1.0;

    double tau = 1.0;
    for (std::size_t lag = 1; lag < n / 2; ++lag) {
        double c = 0;
        for (std::size_t i = 0; i + lag < n; ++i)
            c += (series[i] - mean) * (series[i + lag] - mean);
        c /= static_cast<double>(n - lag) * var;
        if (c <= 0) break;
        tau += 2.0 * c;
    }
    return tau;
}

}  // namespace fairmeter::stats
