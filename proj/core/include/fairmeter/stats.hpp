#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fairmeter::stats {

/// Time-weighted mean of a piecewise-constant (or trapezoid) signal.
class TimeAverage {
public:
    void add(double value, double dt) {
        integral_ += value * dt;
        total_ += dt;
    }
    void add_trapezoid(double v0, double v1, double dt) {
        integral_ += 0.5 * (v0 + v1) * dt;
        total_ += dt;
    }
    double mean() const { return total_ > 0 ? integral_ / total_ : 0.0; }
    double time() const { return total_; }
    double integral() const { return integral_; }

private:
    double integral_ = 0.0;
    double total_ = 0.0;
};

/// Plain sample mean/variance accumulator (Welford).
class Moments {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_error() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Time-weighted occupancy histogram over nonnegative integer states.
class CountHistogram {
public:
    void add(int state, double dt);
    /// Normalized occupancy probabilities; index = state.
    std::vector<double> pmf() const;
    double mean() const;
    double total_time() const { return total_; }

private:
    std::vector<double> weight_;
    double total_ = 0.0;
};

/// Total variation distance between an empirical pmf and a model pmf on
/// {0, ..., n_max}; mass above n_max is lumped into one extra cell.
double total_variation(const std::vector<double>& empirical,
                       const std::function<double(int)>& model_pmf, int n_max);

/// Kolmogorov-Smirnov distance of samples against a cdf (samples get sorted).
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Empirical quantile (linear interpolation); samples get sorted.
double quantile(std::vector<double> samples, double p);

struct TrendReport {
    double slope = 0.0;
    double t_stat = 0.0;    // slope / stderr(slope)
    int blocks = 0;
};

/**
 * Least-squares trend of an irregularly sampled series, made robust to
 * autocorrelation by averaging into `n_blocks` equal-time blocks first and
 * regressing block means on block centers.
 */
TrendReport block_trend(const std::vector<double>& t, const std::vector<double>& v,
                        int n_blocks = 20);

/// Integrated autocorrelation time of an evenly spaced series, in sample
/// steps (initial positive sequence estimator).
double autocorrelation_time(const std::vector<double>& series);

}  // namespace fairmeter::stats
