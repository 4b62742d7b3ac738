#include <doctest.h>
#include <fairmeter/network.hpp>

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

TEST_CASE("validate accepts the identity case") {
    Mat A(1, 1);
    A << 1;
    const Network net = validate(A, vec({1}));
    CHECK(net.num_resources() == 1);
    CHECK(net.num_routes() == 1);
    CHECK(net.topology == Topology::Linear);
}

TEST_CASE("validate rejects duplicate rows") {
    Mat A(2, 2);
    A << 1, 1, 1, 1;
    CHECK_THROWS_AS(validate(A, vec({1, 1})), RankDeficient);
}

TEST_CASE("validate rejects empty routes and bad capacities") {
    Mat A(2, 2);
    A << 1, 0, 1, 0;
    CHECK_THROWS_AS(validate(A, vec({1, 1})), EmptyRoute);
    Mat B(1, 1);
    B << 1;
    CHECK_THROWS_AS(validate(B, vec({0})), NonpositiveCapacity);
    CHECK_THROWS_AS(validate(B, vec({-1})), NonpositiveCapacity);
}

TEST_CASE("validate accepts the J=2 linear matrix") {
    Mat A(2, 2);
    A << 1, 1, 0, 1;
    const Network net = validate(A, vec({2, 1}));
    CHECK(net.num_resources() == 2);
    CHECK(net.topology == Topology::Linear);
}

TEST_CASE("stability margins") {
    {
        Mat A(1, 1);
        A << 1;
        const auto rep = stability_margin(validate(A, vec({1})),
                                          make_traffic_from_loads(vec({0.8})));
        CHECK(rep.margins[0] == doctest::Approx(0.2));
        CHECK(rep.stable);
    }
    {
        const Network net = linear_network(vec({2, 1}));
        const auto rep = stability_margin(net, make_traffic_from_loads(vec({0.5, 0.5})));
        CHECK(rep.margins[0] == doctest::Approx(1.0));
        CHECK(rep.margins[1] == doctest::Approx(0.5));
        CHECK(rep.stable);
    }
    {
        const Network net = linear_network(vec({1, 0.6}));
        const auto rep = stability_margin(net, make_traffic_from_loads(vec({0.55, 0.3})));
        CHECK(rep.margins[0] == doctest::Approx(0.15));
        CHECK(rep.margins[1] == doctest::Approx(0.3));
        CHECK(rep.stable);
        REQUIRE(rep.harmonic_load.has_value());
        CHECK(*rep.harmonic_load == doctest::Approx(1.05));
    }
}

TEST_CASE("margins plus load reproduce capacity exactly") {
    Philox rng(11, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const Network net = oracle::random_network(rng);
        const TrafficParams tp = oracle::random_traffic(rng, net, 0.7);
        const auto sr = stability_margin(net, tp);
        const Vec back = sr.margins + net.A * tp.rho;
        CHECK((back - net.C).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("linear network presets") {
    CHECK(linear_network(vec({1})).A(0, 0) == 1.0);
    const Network two = linear_network(vec({2, 1}));
    CHECK(two.A(0, 0) == 1.0);
    CHECK(two.A(0, 1) == 1.0);
    CHECK(two.A(1, 0) == 0.0);
    CHECK(two.A(1, 1) == 1.0);

    const Network four = linear_network(vec({4, 3, 2, 1}));
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) CHECK(four.A(j, i) == (i >= j ? 1.0 : 0.0));

    CHECK_THROWS_AS(linear_network(vec({1, 2})), CapacityNotDecreasing);
}

TEST_CASE("validate of a linear preset never fails") {
    Philox rng(13, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const int J = 1 + static_cast<int>(rng.below(6));
        Vec C(J);
        double c = 1.0 + 5.0 * rng.uniform();
        for (int j = 0; j < J; ++j) {
            C[j] = c;
            c *= 0.3 + 0.6 * rng.uniform();
        }
        const Network net = linear_network(C);
        CHECK_NOTHROW(validate(net.A, net.C));
    }
}

TEST_CASE("tree6 preset matches the printed incidence matrix") {
    const Network net = tree6_network(vec({10, 3, 2, 6, 2, 3}));
    Mat expect(6, 6);
    expect << 1, 1, 1, 1, 1, 1,
              0, 1, 1, 0, 0, 0,
              0, 0, 1, 0, 0, 0,
              0, 0, 0, 1, 1, 1,
              0, 0, 0, 0, 1, 0,
              0, 0, 0, 0, 0, 1;
    CHECK((net.A - expect).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("general tree constructor") {
    const Network single = tree_network({-1}, vec({1}));
    CHECK(single.A(0, 0) == 1.0);

    const Network two_leaf = tree_network({-1, 0, 0}, vec({3, 1, 1}));
    Mat expect(3, 3);
    expect << 1, 1, 1, 0, 1, 0, 0, 0, 1;
    CHECK((two_leaf.A - expect).lpNorm<Eigen::Infinity>() == 0.0);

    CHECK_THROWS_AS(tree_network({1, 0}, vec({1, 1})), CycleDetected);
    CHECK_THROWS_AS(tree_network({-1, 5}, vec({1, 1})), CycleDetected);
}

TEST_CASE("parallel roads virtual network") {
    const auto pr = parallel_roads_virtual(vec({2, 1, 1, 6}));
    CHECK(pr.virtual_.C[0] == doctest::Approx(2));
    CHECK(pr.virtual_.C[1] == doctest::Approx(3));
    CHECK(pr.virtual_.C[2] == doctest::Approx(4));
    CHECK(pr.virtual_.C[3] == doctest::Approx(6));
    for (int i = 0; i < 4; ++i) CHECK(pr.virtual_.A(3, i) == 1.0);

    CHECK_THROWS_AS(parallel_roads_virtual(vec({1, 1, 1, 2})), CapacityOrdering);

    // Abar is invertible lower-triangular with unit diagonal and its inverse
    // has entries in {-1, 0, 1}
    const Mat inv = pr.virtual_.A.inverse();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            const double e = inv(r, c);
            CHECK((e == doctest::Approx(0.0) || e == doctest::Approx(1.0) ||
                   e == doctest::Approx(-1.0)));
        }
}

TEST_CASE("local traffic detection") {
    Mat A(2, 3);
    A << 1, 0, 1,
         0, 1, 1;
    const Network net = validate(A, vec({1, 1}));
    CHECK(net.has_local_traffic_columns());

    Mat B(2, 2);
    B << 1, 1, 0, 1;
    CHECK_FALSE(validate(B, vec({2, 1})).has_local_traffic_columns());
}
