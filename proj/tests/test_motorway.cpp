#include <doctest.h>
#include <fairmeter/motorway.hpp>

#include "oracles.hpp"

#include <cmath>

using namespace fairmeter;

namespace {
Vec vec(std::initializer_list<double> v) {
    Vec x(static_cast<int>(v.size()));
    int k = 0;
    for (double e : v) x[k++] = e;
    return x;
}
}  // namespace

TEST_CASE("brownian inflow moments") {
    const auto params = make_traffic_from_loads(vec({0.5, 2.0}), 1.5);
    {
        auto p0 = params;
        p0.sigma2 = 0.0;  // degenerate: deterministic increments
        Philox rng(61, 0);
        const Vec de = brownian_inflows(p0, 0.1, rng);
        CHECK(de[0] == doctest::Approx(0.05));
        CHECK(de[1] == doctest::Approx(0.2));
    }
    Philox rng(62, 0);
    const double h = 0.05;
    stats::Moments m0, m1;
    for (int k = 0; k < 1000000; ++k) {
        const Vec de = brownian_inflows(params, h, rng);
        m0.add(de[0]);
        m1.add(de[1]);
    }
    CHECK(std::abs(m0.mean() - 0.5 * h) < 4.0 * m0.std_error());
    CHECK(std::abs(m1.mean() - 2.0 * h) < 4.0 * m1.std_error());
    CHECK(m0.variance() == doctest::Approx(0.5 * 1.5 * h).epsilon(0.05));
    CHECK(m1.variance() == doctest::Approx(2.0 * 1.5 * h).epsilon(0.05));
}

TEST_CASE("pf metering rates on the linear network") {
    const Network two = linear_network(vec({2, 1}));
    const auto r = pf_rates(two, vec({1, 1}));
    CHECK(r.lambda[0] == doctest::Approx(1.0));
    CHECK(r.lambda[1] == doctest::Approx(1.0));
    CHECK(r.q[0] == doctest::Approx(1.0));
    CHECK(r.q[1] == doctest::Approx(0.0));
    CHECK(r.d[0] == doctest::Approx(1.0));
    CHECK(r.d[1] == doctest::Approx(1.0));

    CHECK(pf_rates(two, vec({0, 0.7})).lambda[0] == 0.0);
}

TEST_CASE("pf tight resources run at capacity") {
    Philox rng(63, 0);
    for (int rep = 0; rep < 30; ++rep) {
        const int J = 1 + static_cast<int>(rng.below(5));
        Vec C(J);
        double c = 2.0 + 3.0 * rng.uniform();
        for (int j = 0; j < J; ++j) {
            C[j] = c;
            c *= 0.4 + 0.5 * rng.uniform();
        }
        const Network net = linear_network(C);
        Vec m(J);
        for (int i = 0; i < J; ++i) m[i] = 2.0 * rng.uniform();
        const auto r = pf_rates(net, m);
        const Vec usage = net.A * r.lambda;
        CHECK((usage - net.C).maxCoeff() <= 1e-9);
        for (int j = 0; j < J; ++j)
            if (r.q[j] > 1e-9) CHECK(usage[j] == doctest::Approx(net.C[j]).epsilon(1e-9));
    }
}

TEST_CASE("upstream priority cascade") {
    const Network two = linear_network(vec({2, 1}));
    const Vec none = Vec::Zero(2);
    {
        const Vec lam = upstream_priority_rates(two, vec({1, 1}), none);
        CHECK(lam[0] == doctest::Approx(1.0));
        CHECK(lam[1] == doctest::Approx(1.0));
    }
    {
        const Vec lam = upstream_priority_rates(two, vec({1, 0}), none);
        CHECK(lam[0] == doctest::Approx(2.0));
        CHECK(lam[1] == doctest::Approx(0.0));
    }
    {
        const Vec lam = upstream_priority_rates(two, vec({0, 1}), none);
        CHECK(lam[0] == doctest::Approx(0.0));
        CHECK(lam[1] == doctest::Approx(1.0));
    }
    Mat A(1, 2);
    A << 1, 1;
    const Network not_linear = validate(A, vec({1}));
    CHECK_THROWS_AS(upstream_priority_rates(not_linear, vec({1, 1}), none), NotLinearNetwork);
}

TEST_CASE("downstream priority serves one line") {
    const Network two = linear_network(vec({2, 1}));
    {
        const Vec lam = downstream_priority_rates(two, vec({1, 1}));
        CHECK(lam[0] == doctest::Approx(2.0));
        CHECK(lam[1] == doctest::Approx(0.0));
    }
    {
        const Vec lam = downstream_priority_rates(two, vec({0, 1}));
        CHECK(lam[0] == doctest::Approx(0.0));
        CHECK(lam[1] == doctest::Approx(1.0));
    }
    CHECK(downstream_priority_rates(two, vec({0, 0})).norm() == 0.0);
}

TEST_CASE("stationary law of the linear model") {
    const Network two = linear_network(vec({2, 1}));
    const auto law = stationary_law(two, make_traffic_from_loads(vec({0.5, 0.5}), 1.0));
    CHECK(law.zeta[0] == doctest::Approx(2.0));
    CHECK(law.zeta[1] == doctest::Approx(1.0));
    CHECK(law.mean_d[1] == doctest::Approx(1.5));
    CHECK(law.mean_d[0] == doctest::Approx(0.5));
    CHECK(law.var_d[1] == doctest::Approx(0.25 + 1.0));
    CHECK_THROWS_AS(
        stationary_law(two, make_traffic_from_loads(vec({1.5, 0.6}), 1.0)), UnstableLoad);
}

TEST_CASE("tree stationary delays are ordered along root paths") {
    const Network tree = tree6_network(vec({10, 3, 2, 6, 2, 3}));
    const auto params =
        make_traffic_from_loads(vec({0.5, 0.4, 0.6, 0.7, 0.8, 0.9}), 1.0);
    const auto law = stationary_law(tree, params);
    const Vec margins = tree.C - tree.A * params.rho;
    for (int j = 0; j < 6; ++j) CHECK(law.zeta[j] == doctest::Approx(2.0 * margins[j]));
    CHECK(law.mean_d[1] >= law.mean_d[0]);
    CHECK(law.mean_d[2] >= law.mean_d[1]);
    CHECK(law.mean_d[3] >= law.mean_d[0]);
    CHECK(law.mean_d[4] >= law.mean_d[3]);
    CHECK(law.mean_d[5] >= law.mean_d[3]);
}

TEST_CASE("delay quantiles are monotone in the probability") {
    const Network two = linear_network(vec({2, 1}));
    const auto law = stationary_law(two, make_traffic_from_loads(vec({0.5, 0.5}), 1.0));
    const Mat qs = delay_quantiles(law, two, {0.25, 0.5, 0.9}, 20000, 64);
    for (int i = 0; i < 2; ++i) {
        CHECK(qs(0, i) < qs(1, i));
        CHECK(qs(1, i) < qs(2, i));
    }
}

TEST_CASE("nominal delays and face equality") {
    const Network two = linear_network(vec({2, 1}));
    const Vec d = nominal_delays(two, vec({1, 0}));
    CHECK(d[0] == doctest::Approx(1.0));
    CHECK(d[1] == doctest::Approx(1.0));
    CHECK(nominal_delays(two, vec({0, 0})).norm() == 0.0);

    const Network four = linear_network(vec({4, 3, 2, 1}));
    const Vec dd = nominal_delays(four, vec({0.5, 0.25, 0.25, 0.1}));
    for (int i = 1; i < 4; ++i) CHECK(dd[i] > dd[i - 1]);
}

TEST_CASE("collapsed network drops the unconstrained section") {
    const Network four = linear_network(vec({4, 3, 2, 1}));
    const Network coll = collapsed_network(four, 2);
    Mat expect(3, 4);
    expect << 1, 1, 1, 1,
              0, 1, 1, 1,
              0, 0, 0, 1;
    CHECK((coll.A - expect).lpNorm<Eigen::Infinity>() == 0.0);

    const Network two = linear_network(vec({2, 1}));
    const Network c2 = collapsed_network(two, 1);
    CHECK(c2.num_resources() == 1);
    CHECK(c2.A(0, 0) == 1.0);
    CHECK(c2.A(0, 1) == 1.0);
}

TEST_CASE("collapsed lift pins m2/m3 to rho2/rho3") {
    const Network four = linear_network(vec({4, 3, 2, 1}));
    const Network coll = collapsed_network(four, 2);
    const Vec rho = vec({0.6, 0.5, 0.4, 0.3});
    const auto params = make_traffic_from_loads(rho, 1.0);
    // lift a random cone point: m = [rho] A' (A [rho] A')^-1 w with w = G q
    const Mat G = coll.A * rho.asDiagonal() * coll.A.transpose();
    Philox rng(65, 0);
    for (int rep = 0; rep < 10; ++rep) {
        Vec q(3);
        for (int j = 0; j < 3; ++j) q[j] = 0.2 + rng.uniform();
        const Vec w = G * q;
        const Vec m = rho.asDiagonal() * (coll.A.transpose() * q);
        CHECK(m[1] / m[2] == doctest::Approx(rho[1] / rho[2]).epsilon(1e-10));
        // nonnegative least squares recognises cone membership for the
        // rectangular collapsed matrix
        BrownianSpec spec;
        spec.cone_map = G;
        spec.theta = coll.C - coll.A * rho;
        spec.gamma = G;
        CHECK(cone_contains(spec, w).contained);
    }
}

TEST_CASE("first strategy cone") {
    CHECK(first_strategy_cone_check(vec({3, 2, 1})));
    CHECK_FALSE(first_strategy_cone_check(vec({1, 2})));
    CHECK(first_strategy_cone_check(vec({0, 0})));
}

TEST_CASE("zero-noise pf run drains total work") {
    const Network three = linear_network(vec({3, 2, 1}));
    const auto params = make_traffic_from_loads(vec({0.5, 0.5, 0.5}), 0.0);
    MotorwaySimConfig cfg;
    cfg.T = 20.0;
    cfg.h = 1e-3;
    cfg.seed = 66;
    cfg.initial_m = vec({1.0, 1.0, 1.0});
    const auto res =
        simulate_motorway(three, params, PolicyKind::ProportionalFair, ArrivalMode::Brownian, cfg);
    CHECK(res.reps[0].final_total_m < 3.0);
    CHECK(res.reps[0].max_capacity_violation <= 1e-9);
}

TEST_CASE("single-section brownian pf run is the reflected workload model") {
    // with one section the metered system is exactly the one-dimensional
    // reflected model, so the analytic mean is an exact target
    Vec C1(1);
    C1 << 1;
    const Network one = linear_network(C1);
    const auto params = make_traffic_from_loads(vec({0.9}), 1.0);
    MotorwaySimConfig cfg;
    cfg.T = 2e4;
    cfg.h = 1e-3;
    cfg.seed = 71;
    const auto res =
        simulate_motorway(one, params, PolicyKind::ProportionalFair, ArrivalMode::Brownian, cfg);
    const auto law = stationary_law(one, params);
    CHECK(res.mean_m[0] == doctest::Approx(law.mean_m[0]).epsilon(0.15));
    CHECK(res.reps[0].max_capacity_violation <= 1e-9);
}

TEST_CASE("brownian pf run stays feasible with ordered delays") {
    const Network three = linear_network(vec({3, 2, 1}));
    const auto params = make_traffic_from_loads(vec({0.9, 0.9, 0.9}), 1.0);
    MotorwaySimConfig cfg;
    cfg.T = 3000.0;
    cfg.h = 1e-3;
    cfg.seed = 67;
    const auto res =
        simulate_motorway(three, params, PolicyKind::ProportionalFair, ArrivalMode::Brownian, cfg);
    CHECK(res.reps[0].max_capacity_violation <= 1e-9);
    // delay estimates grow along the road; the quantitative match to the
    // stationary law is probed at proper length in the acceptance suite
    CHECK(res.mean_d[0] < res.mean_d[1]);
    CHECK(res.mean_d[1] < res.mean_d[2]);
    CHECK(res.utilization.maxCoeff() <= 1.0 + 1e-9);
    CHECK(res.utilization.minCoeff() > 0.8);
}

TEST_CASE("downstream starves the system while pf holds it stable") {
    const Network two = linear_network(vec({1, 0.6}));
    const auto params = make_traffic_from_loads(vec({0.55, 0.3}), 1.0);
    MotorwaySimConfig cfg;
    cfg.T = 3e4;
    cfg.seed = 68;
    cfg.record_events = true;
    const auto down = simulate_motorway(two, params, PolicyKind::DownstreamPriority,
                                        ArrivalMode::PoissonJobs, cfg);
    const auto pf = simulate_motorway(two, params, PolicyKind::ProportionalFair,
                                      ArrivalMode::PoissonJobs, cfg);
    CHECK(down.reps[0].total_m_trend.slope > 0.0);
    CHECK(down.reps[0].total_m_trend.t_stat > 5.0);
    const bool pf_drifts_up =
        pf.reps[0].total_m_trend.slope > 0.0 && pf.reps[0].total_m_trend.t_stat > 5.0;
    CHECK_FALSE(pf_drifts_up);
}

TEST_CASE("upstream priority dominates pf pathwise on a shared stream") {
    const Network three = linear_network(vec({3, 2, 1}));
    const auto params = make_traffic_from_loads(vec({0.8, 0.7, 0.6}), 1.0);
    MotorwaySimConfig cfg;
    cfg.T = 5e3;
    cfg.seed = 69;
    cfg.record_events = true;
    const auto up = simulate_motorway(three, params, PolicyKind::UpstreamPriority,
                                      ArrivalMode::PoissonJobs, cfg);
    const auto pf = simulate_motorway(three, params, PolicyKind::ProportionalFair,
                                      ArrivalMode::PoissonJobs, cfg);
    REQUIRE(up.reps[0].event_t.size() == pf.reps[0].event_t.size());
    for (std::size_t k = 0; k < up.reps[0].event_t.size(); ++k) {
        REQUIRE(up.reps[0].event_t[k] == doctest::Approx(pf.reps[0].event_t[k]).epsilon(1e-12));
        CHECK(up.reps[0].event_total_m[k] <= pf.reps[0].event_total_m[k] + 1.0);
    }
}

TEST_CASE("replications are deterministic and mergeable") {
    const Network two = linear_network(vec({2, 1}));
    const auto params = make_traffic_from_loads(vec({0.5, 0.4}), 1.0);
    MotorwaySimConfig cfg;
    cfg.T = 50.0;
    cfg.h = 1e-3;
    cfg.seed = 70;
    cfg.replications = 3;
    const auto a =
        simulate_motorway(two, params, PolicyKind::ProportionalFair, ArrivalMode::Brownian, cfg);
    cfg.threads = 1;
    const auto b =
        simulate_motorway(two, params, PolicyKind::ProportionalFair, ArrivalMode::Brownian, cfg);
    REQUIRE(a.reps.size() == 3);
    for (int r = 0; r < 3; ++r) {
        CHECK((a.reps[r].mean_m - b.reps[r].mean_m).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK((a.reps[r].mean_d - b.reps[r].mean_d).lpNorm<Eigen::Infinity>() == 0.0);
    }
}
