#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fairmeter/motorway.hpp"
#include "fairmeter/network.hpp"
#include "fairmeter/queue.hpp"

namespace fairmeter {

/**
 * Scenario file: one JSON document drives every CLI command. Networks come
 * inline ({"A": [[0|1,...],...], "C": [...]}) or as presets
 * ({"preset": "linear"|"tree6"|"tree"|"parallel4", ...}); traffic gives
 * nu/mu or rho (unit work) plus sigma2. All randomness flows from sim.seed.
 */
struct Scenario {
    std::optional<Network> network;
    std::optional<TrafficParams> traffic;
    std::string model = "motorway";  // "flow" | "motorway" (stationary laws)
    PolicyKind policy = PolicyKind::ProportionalFair;
    ArrivalMode mode = ArrivalMode::Brownian;

    // queue block (cli queue)
    struct Queue {
        std::string kind = "mm1";  // mm1 | mg1ps | rbm
        double nu = 0.8;
        double mu = 1.0;
        double rho = 0.8;
        double sigma2 = 1.0;
        std::optional<WorkDistribution> work;
    };
    std::optional<Queue> queue;

    // simulation block
    double T = 1e4;
    double h = 1e-3;
    std::uint64_t events = 1000000;
    std::optional<std::uint64_t> seed;  // mandatory for simulation commands
    double burn_in = 0.2;
    int replications = 1;
    int record_stride = 0;

    std::optional<Vec> counts;  // "n": route counts for `allocate`

    std::string out_dir = "out";
    std::string format = "csv";

    static Scenario from_json(const nlohmann::json& j);
    static Scenario load(const std::string& path);

    /// Canonical resolved form; from_json(resolved()) round-trips exactly.
    nlohmann::json resolved() const;
};

std::string policy_name(PolicyKind p);
PolicyKind policy_from_name(const std::string& s);
std::string mode_name(ArrivalMode m);
ArrivalMode mode_from_name(const std::string& s);

}  // namespace fairmeter
