#include <doctest.h>
#include <fairmeter/flow.hpp>
#include <fairmeter/queue.hpp>

#include "oracles.hpp"

using namespace fairmeter;

namespace {
Vec vec(std::initializer_list<double> v) {
    Vec x(static_cast<int>(v.size()));
    int k = 0;
    for (double e : v) x[k++] = e;
    return x;
}
}  // namespace

TEST_CASE("workload of a state") {
    Mat A1(1, 1);
    A1 << 1;
    const Network unit = validate(A1, vec({1}));
    CHECK(workload_of(unit, make_traffic(vec({1}), vec({2})), vec({0}))[0] == 0.0);
    CHECK(workload_of(unit, make_traffic(vec({1}), vec({2})), vec({4}))[0] ==
          doctest::Approx(2.0));

    const Network two = linear_network(vec({2, 1}));
    const Vec w = workload_of(two, make_traffic(vec({1, 1}), vec({1, 1})), vec({1, 2}));
    CHECK(w[0] == doctest::Approx(3.0));
    CHECK(w[1] == doctest::Approx(2.0));
}

TEST_CASE("stationary approximation") {
    Mat A1(1, 1);
    A1 << 1;
    const Network unit = validate(A1, vec({1}));
    const auto law = approx_stationary(unit, make_traffic(vec({0.8}), vec({1})));
    CHECK(law.rates[0] == doctest::Approx(0.2));
    CHECK(law.mean_n[0] == doctest::Approx(4.0));

    const Network two = linear_network(vec({2, 1}));
    const auto law2 = approx_stationary(two, make_traffic(vec({0.5, 0.5}), vec({1, 1})));
    CHECK(law2.rates[0] == doctest::Approx(1.0));
    CHECK(law2.rates[1] == doctest::Approx(0.5));
    CHECK(law2.mean_n[1] == doctest::Approx(1.5));

    CHECK_THROWS_AS(approx_stationary(two, make_traffic(vec({2.5, 0.1}), vec({1, 1}))),
                    UnstableLoad);
}

TEST_CASE("ctmc reduces to mm1 on the single-route network") {
    Mat A1(1, 1);
    A1 << 1;
    const Network unit = validate(A1, vec({1}));
    CtmcOptions opts;
    opts.track_histograms = true;
    const auto res = simulate_ctmc(unit, make_traffic(vec({0.8}), vec({1})), 200000, 51, opts);
    const auto law = mm1_stationary(0.8);
    const double tv = stats::total_variation(res.histograms[0].pmf(),
                                             [&](int n) { return law.pmf(n); }, 50);
    CHECK(tv < 0.06);
    CHECK(res.mean_n[0] == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("ctmc with no arrivals is a pure death chain") {
    const Network two = linear_network(vec({2, 1}));
    CtmcOptions opts;
    opts.initial = {3, 2};
    opts.record_stride = 1;
    const auto res = simulate_ctmc(two, make_traffic(vec({0, 0}), vec({1, 1})), 100, 52, opts);
    CHECK(res.events == 5);  // exactly the initial jobs depart
    CHECK(res.path.n.back().maxCoeff() == 0.0);
    for (const auto& n : res.path.n) CHECK(n.minCoeff() >= 0.0);
}

TEST_CASE("ctmc workload identity and cache behave") {
    const Network two = linear_network(vec({2, 1}));
    const auto params = make_traffic(vec({0.6, 0.3}), vec({1, 2}));
    CtmcOptions opts;
    opts.record_stride = 7;
    const auto res = simulate_ctmc(two, params, 20000, 53, opts);
    for (std::size_t k = 0; k < res.path.t.size(); ++k) {
        const Vec expect = two.A * (res.path.n[k].array() / params.mu.array()).matrix();
        CHECK((res.path.w[k] - expect).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    CHECK(res.cache_hits > res.cache_misses);  // states repeat at moderate load
}

TEST_CASE("ctmc tracks the heavy-traffic approximation on local+common topology") {
    Mat A(2, 3);
    A << 1, 0, 1,
         0, 1, 1;
    const Network net = validate(A, vec({1, 1}));
    const auto params = make_traffic(vec({0.4, 0.4, 0.4}), vec({1, 1, 1}));
    const auto law = approx_stationary(net, params);  // margins 0.2
    const auto res = simulate_ctmc(net, params, 400000, 54);
    for (int i = 0; i < 3; ++i)
        CHECK(res.mean_n[i] == doctest::Approx(law.mean_n[i]).epsilon(0.3));
}

TEST_CASE("fluid drains a single queue at rate nu - C") {
    Mat A1(1, 1);
    A1 << 1;
    const Network unit = validate(A1, vec({1}));
    const auto res =
        integrate_fluid(unit, make_traffic(vec({0.5}), vec({1})), vec({1}), 1.0, 1e-4);
    CHECK(res.terminal_n[0] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("fluid is stationary on the invariant manifold at critical load") {
    const Network two = linear_network(vec({2, 1}));
    const auto params = make_traffic(vec({1, 1}), vec({1, 1}));  // A rho = C exactly
    const Vec q = vec({1, 1});
    const Vec n0 = params.rho.asDiagonal() * (two.A.transpose() * q);
    const auto res = integrate_fluid(two, params, n0, 1.0, 1e-3);
    CHECK((res.terminal_n - n0).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("fluid descends the lyapunov gap and lands on the manifold") {
    Philox rng(55, 0);
    for (int rep = 0; rep < 3; ++rep) {
        const Network net = oracle::random_network(rng, 3, 4);
        const auto params = oracle::random_traffic(rng, net, 0.7);
        const auto margins = stability_margin(net, params);
        Vec n0(net.num_routes());
        for (int i = 0; i < n0.size(); ++i) n0[i] = 2.0 * rng.uniform();
        const double T = 50.0 / margins.margins.minCoeff();
        const auto res = integrate_fluid(net, params, n0, T, 1e-3);
        CHECK(res.max_lyapunov_increase <= 1e-6);
        CHECK(res.terminal_manifold_distance <= 1e-3);
    }
}
