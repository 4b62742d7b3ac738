#include "fairmeter/network.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <cstdint>

namespace fairmeter {

namespace {

// Fraction-free (Bareiss) elimination over the integers. Entries of A are
// 0/1 so intermediates stay tiny for any realistic J; bail out to floating
// point if they ever would not.
bool full_row_rank_exact(const Mat& A, bool& overflow) {
    const int J = static_cast<int>(A.rows());
    const int I = static_cast<int>(A.cols());
    overflow = false;
    if (J > I) return false;

    std::vector<std::vector<std::int64_t>> M(J, std::vector<std::int64_t>(I));
    for (int j = 0; j < J; ++j)
        for (int i = 0; i < I; ++i) M[j][i] = static_cast<std::int64_t>(std::lround(A(j, i)));

    std::int64_t prev = 1;
    int row = 0;
    for (int col = 0; col < I && row < J; ++col) {
        int pivot = -1;
        for (int r = row; r < J; ++r)
            if (M[r][col] != 0) { pivot = r; break; }
        if (pivot < 0) continue;
        std::swap(M[pivot], M[row]);
        for (int r = row + 1; r < J; ++r) {
            for (int c = col + 1; c < I; ++c) {
                const std::int64_t num = M[row][col] * M[r][c] - M[r][col] * M[row][c];
                if (std::abs(M[row][col]) > (1ll << 30) || std::abs(num) > (1ll << 62)) {
                    overflow = true;
                    return false;
                }
                M[r][c] = num / prev;
            }
            M[r][col] = 0;
        }
        prev = M[row][col];
        ++row;
    }
    return row == J;
}

bool full_row_rank_float(const Mat& A) {
    Eigen::FullPivLU<Mat> lu(A);
    lu.setThreshold(1e-10);
    return lu.rank() == A.rows();
}

}  // namespace

bool Network::has_local_traffic_columns() const {
    const int J = num_resources();
    const int I = num_routes();
    std::vector<bool> seen(J, false);
    for (int i = 0; i < I; ++i) {
        int ones = 0, where = -1;
        for (int j = 0; j < J; ++j) {
            if (A(j, i) != 0.0) { ++ones; where = j; }
        }
        if (ones == 1) seen[where] = true;
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

TrafficParams make_traffic(Vec nu, Vec mu, double sigma2) {
    if (nu.size() != mu.size())
        throw ValidationError("traffic: nu and mu must have equal length");
    if ((nu.array() < 0).any() || !nu.allFinite())
        throw ValidationError("traffic: nu must be finite and nonnegative");
    if ((mu.array() <= 0).any() || !mu.allFinite())
        throw ValidationError("traffic: mu must be finite and positive");
    if (!(sigma2 >= 0))
        throw ValidationError("traffic: sigma2 must be nonnegative");
    TrafficParams p;
    p.rho = nu.array() / mu.array();
    p.nu = std::move(nu);
    p.mu = std::move(mu);
    p.sigma2 = sigma2;
    return p;
}

TrafficParams make_traffic_from_loads(Vec rho, double sigma2) {
    Vec mu = Vec::Ones(rho.size());
    return make_traffic(std::move(rho), std::move(mu), sigma2);
}

Network validate(const Mat& A, const Vec& C) {
    const int J = static_cast<int>(A.rows());
    const int I = static_cast<int>(A.cols());
    if (J == 0 || I == 0) throw ValidationError("network: empty incidence matrix");
    if (C.size() != J) throw ValidationError("network: C length must equal row count of A");

    for (int j = 0; j < J; ++j)
        for (int i = 0; i < I; ++i)
            if (A(j, i) != 0.0 && A(j, i) != 1.0)
                throw ValidationError("network: A entries must be 0 or 1");

    for (int i = 0; i < I; ++i)
        if (A.col(i).sum() == 0.0)
            throw EmptyRoute("network: route " + std::to_string(i + 1) + " uses no resource");

    for (int j = 0; j < J; ++j)
        if (!(C(j) > 0.0) || !std::isfinite(C(j)))
            throw NonpositiveCapacity("network: capacity of resource " + std::to_string(j + 1) +
                                      " must be positive");

    bool overflow = false;
    const bool ok = full_row_rank_exact(A, overflow) || (overflow && full_row_rank_float(A));
    if (!ok) throw RankDeficient("network: incidence matrix does not have full row rank");

    Network net;
    net.A = A;
    net.C = C;
    net.topology = is_linear_topology(A, C) ? Topology::Linear : Topology::General;
    return net;
}

StabilityReport stability_margin(const Network& net, const TrafficParams& params) {
    if (params.rho.size() != net.num_routes())
        throw ValidationError("stability: rho length must equal route count");
    StabilityReport rep;
    rep.margins = net.C - net.A * params.rho;
    rep.stable = (rep.margins.array() > 0).all();
    if (net.topology == Topology::Linear)
        rep.harmonic_load = (params.rho.array() / net.C.array()).sum();
    return rep;
}

bool is_linear_topology(const Mat& A, const Vec& C) {
    const int J = static_cast<int>(A.rows());
    if (A.cols() != J) return false;
    for (int j = 0; j < J; ++j)
        for (int i = 0; i < J; ++i)
            if (A(j, i) != (i >= j ? 1.0 : 0.0)) return false;
    for (int j = 0; j + 1 < J; ++j)
        if (!(C(j) > C(j + 1))) return false;
    return (C.array() > 0).all();
}

Network linear_network(const Vec& C) {
    const int J = static_cast<int>(C.size());
    if (J == 0) throw ValidationError("linear network: need at least one section");
    for (int j = 0; j < J; ++j) {
        if (!(C(j) > 0.0)) throw NonpositiveCapacity("linear network: capacities must be positive");
        if (j + 1 < J && !(C(j) > C(j + 1)))
            throw CapacityNotDecreasing("linear network: capacities must be strictly decreasing");
    }
    Network net;
    net.A = Mat::Zero(J, J);
    for (int j = 0; j < J; ++j)
        for (int i = j; i < J; ++i) net.A(j, i) = 1.0;
    net.C = C;
    net.topology = Topology::Linear;
    return net;
}

Network tree_network(const std::vector<int>& parent, const Vec& C) {
    const int J = static_cast<int>(parent.size());
    if (J == 0) throw ValidationError("tree network: empty parent map");
    if (C.size() != J) throw ValidationError("tree network: C length must match parent map");
    for (int j = 0; j < J; ++j)
        if (!(C(j) > 0.0)) throw NonpositiveCapacity("tree network: capacities must be positive");

    Mat A = Mat::Zero(J, J);
    for (int i = 0; i < J; ++i) {
        int node = i, steps = 0;
        while (node >= 0) {
            if (node >= J || ++steps > J)
                throw CycleDetected("tree network: parent map has a cycle or bad index");
            A(node, i) = 1.0;
            node = parent[node];
        }
    }
    Network net = validate(A, C);
    if (net.topology == Topology::General) net.topology = Topology::Tree;
    return net;
}

Network tree6_network(const Vec& C) {
    if (C.size() != 6) throw ValidationError("tree6: needs exactly 6 capacities");
    // root section 1; sections 2-3 one branch, 4 with leaves 5 and 6 the other
    return tree_network({-1, 0, 1, 0, 3, 3}, C);
}

ParallelRoads parallel_roads_virtual(const Vec& C) {
    if (C.size() != 4) throw ValidationError("parallel roads: needs exactly 4 capacities");
    for (int j = 0; j < 4; ++j)
        if (!(C(j) > 0.0)) throw NonpositiveCapacity("parallel roads: capacities must be positive");
    if (!(C(0) + C(1) + C(2) < C(3)))
        throw CapacityOrdering("parallel roads: requires C1 + C2 + C3 < C4");

    ParallelRoads out;
    Mat A(4, 4);
    A << 1, 0, 0, 0,
         0, 1, 0, 0,
         0, 0, 1, 0,
         1, 1, 1, 1;
    out.physical = validate(A, C);
    out.physical.topology = Topology::Parallel4;

    Mat Abar(4, 4);
    Abar << 1, 0, 0, 0,
            1, 1, 0, 0,
            1, 1, 1, 0,
            1, 1, 1, 1;
    Vec Cbar(4);
    Cbar << C(0), C(0) + C(1), C(0) + C(1) + C(2), C(3);
    out.virtual_ = validate(Abar, Cbar);
    return out;
}

}  // namespace fairmeter
