// fairmeter: scenario-driven CLI for the fair-metering toolkit.
//
// Subcommands: allocate, stationary, simulate, ctmc, fluid, queue,
// route-choice, compare. All randomness flows from the scenario seed; with a
// fixed seed (and any thread count) outputs are reproducible byte for byte.
// Exit codes: 0 ok, 1 validation error, 2 runtime/solver error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fairmeter/allocator.hpp>
#include <fairmeter/flow.hpp>
#include <fairmeter/motorway.hpp>
#include <fairmeter/network.hpp>
#include <fairmeter/queue.hpp>
#include <fairmeter/route_choice.hpp>
#include <fairmeter/scenario.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace fairmeter;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string scenario_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::optional<std::string> policy;
    std::optional<std::string> mode;
    std::optional<std::string> format;
    std::string counts;  // --n "1,1"
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides scenario)");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--replications", args.replications, "replication count override");
    cmd->add_option("--policy", args.policy, "pf|upstream|downstream");
    cmd->add_option("--mode", args.mode, "brownian|jobs");
    cmd->add_option("--format", args.format, "csv|json");
}

Scenario resolve(const CommonArgs& args) {
    Scenario sc = Scenario::load(args.scenario_path);
    if (!args.out_dir.empty()) sc.out_dir = args.out_dir;
    if (args.seed) sc.seed = *args.seed;
    if (args.replications) sc.replications = *args.replications;
    if (args.policy) sc.policy = policy_from_name(*args.policy);
    if (args.mode) sc.mode = mode_from_name(*args.mode);
    if (args.format) {
        if (*args.format != "csv" && *args.format != "json")
            throw ValidationError("--format must be csv or json");
        sc.format = *args.format;
    }
    if (!args.counts.empty()) {
        std::vector<double> vals;
        std::stringstream ss(args.counts);
        std::string tok;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        Vec n(vals.size());
        for (std::size_t k = 0; k < vals.size(); ++k) n[k] = vals[k];
        sc.counts = n;
    }
    return sc;
}

const Network& need_network(const Scenario& sc) {
    if (!sc.network) throw ValidationError("scenario: this command needs a network block");
    return *sc.network;
}

const TrafficParams& need_traffic(const Scenario& sc) {
    if (!sc.traffic) throw ValidationError("scenario: this command needs a traffic block");
    return *sc.traffic;
}

std::uint64_t need_seed(const Scenario& sc) {
    if (!sc.seed) throw ValidationError("scenario: simulation commands need sim.seed");
    return *sc.seed;
}

json vec_to(const Vec& v) {
    json arr = json::array();
    for (int k = 0; k < v.size(); ++k) arr.push_back(v[k]);
    return arr;
}

std::ofstream open_csv(const Scenario& sc, const std::string& name) {
    fs::create_directories(sc.out_dir);
    const auto path = fs::path(sc.out_dir) / name;
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
    if (!out) throw ComputeError("cannot open output file " + path.string());
    out.precision(12);
    return out;
}

void emit_summary(const Scenario& sc, const std::string& name, json summary) {
    summary["config"] = sc.resolved();
    const std::string text = summary.dump(2) + "\n";
    std::cout << text;
    fs::create_directories(sc.out_dir);
    std::ofstream out(fs::path(sc.out_dir) / (name + "_summary.json"), std::ios::binary);
    out << text;
}

void write_path_csv(std::ofstream& out, const std::vector<std::string>& groups,
                    const std::vector<int>& widths) {
    out << "time";
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (int k = 1; k <= widths[g]; ++k) out << "," << groups[g] << "_" << k;
    out << "\n";
}

void row(std::ofstream& out, double t, std::initializer_list<const Vec*> cols) {
    out << t;
    for (const Vec* v : cols)
        for (int k = 0; k < v->size(); ++k) out << "," << (*v)[k];
    out << "\n";
}

// ---------------------------------------------------------------- commands

int cmd_allocate(const Scenario& sc) {
    const Network& net = need_network(sc);
    if (!sc.counts)
        throw ValidationError(
            "allocate: no counts given; pass --n \"n_1,...,n_I\" or an \"n\" array in the "
            "scenario");
    const Allocation a = allocate(net, *sc.counts);
    json out;
    out["lambda"] = vec_to(a.lambda);
    out["q"] = vec_to(a.q);
    out["d"] = vec_to(delays_from_duals(net, a.q));
    out["objective"] = a.objective;
    out["active"] = a.active;
    out["iterations"] = a.iterations;
    emit_summary(sc, "allocate", out);
    return 0;
}

int cmd_stationary(const Scenario& sc) {
    const Network& net = need_network(sc);
    const TrafficParams& params = need_traffic(sc);
    json out;
    if (sc.model == "flow") {
        const auto law = approx_stationary(net, params);
        out["kind"] = "flow_approx";
        out["rates"] = vec_to(law.rates);
        out["mean_n"] = vec_to(law.mean_n);
        out["var_n"] = vec_to(law.var_n);
    } else if (net.topology == Topology::Parallel4) {
        const auto law = zeta_params(params.rho, net.C, params.sigma2);
        out["kind"] = "route_choice_virtual";
        out["zeta"] = vec_to(law.zeta);
        out["mean_delay"] = vec_to(law.mean_delay);
        out["var_delay"] = vec_to(law.var_delay);
        out["mean_m"] = vec_to(law.mean_m);
    } else {
        const auto law = stationary_law(net, params);
        out["kind"] = "motorway";
        out["zeta"] = vec_to(law.zeta);
        out["mean_q"] = vec_to(law.mean_q);
        out["mean_d"] = vec_to(law.mean_d);
        out["var_d"] = vec_to(law.var_d);
        out["mean_m"] = vec_to(law.mean_m);
        out["var_m"] = vec_to(law.var_m);
        const std::vector<double> probs{0.5, 0.9, 0.99};
        const Mat qs = delay_quantiles(law, net, probs, 200000, sc.seed.value_or(1));
        json jq;
        for (std::size_t p = 0; p < probs.size(); ++p) {
            json lane = json::array();
            for (int i = 0; i < net.num_routes(); ++i) lane.push_back(qs(int(p), i));
            jq[std::to_string(probs[p])] = lane;
        }
        out["delay_quantiles"] = jq;
    }
    emit_summary(sc, "stationary", out);
    return 0;
}

MotorwaySimConfig sim_config(const Scenario& sc) {
    MotorwaySimConfig cfg;
    cfg.T = sc.T;
    cfg.h = sc.h;
    cfg.seed = need_seed(sc);
    cfg.burn_in = sc.burn_in;
    cfg.replications = sc.replications;
    cfg.record_stride = sc.record_stride > 0 ? sc.record_stride : 1000;
    cfg.record_events = sc.mode == ArrivalMode::PoissonJobs;
    return cfg;
}

json motorway_summary(const Network& net, const MotorwayResult& res) {
    json out;
    out["mean_m"] = vec_to(res.mean_m);
    out["mean_d"] = vec_to(res.mean_d);
    out["mean_q"] = vec_to(res.mean_q);
    out["utilization"] = vec_to(res.utilization);
    out["total_mean_m"] = res.mean_m.sum();
    json reps = json::array();
    for (const auto& r : res.reps) {
        json jr;
        jr["mean_m"] = vec_to(r.mean_m);
        jr["final_total_m"] = r.final_total_m;
        jr["trend_slope"] = r.total_m_trend.slope;
        jr["trend_t_stat"] = r.total_m_trend.t_stat;
        jr["max_capacity_violation"] = r.max_capacity_violation;
        reps.push_back(jr);
    }
    out["replications"] = reps;
    (void)net;
    return out;
}

void write_motorway_csv(const Scenario& sc, const std::string& name, const Network& net,
                        const MotorwayPath& path) {
    if (sc.format != "csv") return;
    auto out = open_csv(sc, name);
    write_path_csv(out, {"m", "lambda", "q", "d", "u"},
                   {net.num_routes(), net.num_routes(), net.num_resources(), net.num_routes(),
                    net.num_resources()});
    for (std::size_t k = 0; k < path.t.size(); ++k)
        row(out, path.t[k],
            {&path.m[k], &path.lambda[k], &path.q[k], &path.d[k], &path.unused[k]});
}

int cmd_simulate(const Scenario& sc) {
    const Network& net = need_network(sc);
    const TrafficParams& params = need_traffic(sc);
    const auto stab = stability_margin(net, params);
    if (!stab.stable)
        std::cerr << "warning: load is outside the stability region (min margin "
                  << stab.margins.minCoeff() << ")\n";
    const auto res = simulate_motorway(net, params, sc.policy, sc.mode, sim_config(sc));
    write_motorway_csv(sc, "motorway.csv", net, res.path);
    emit_summary(sc, "simulate", motorway_summary(net, res));
    return 0;
}

int cmd_ctmc(const Scenario& sc) {
    const Network& net = need_network(sc);
    const TrafficParams& params = need_traffic(sc);
    CtmcOptions opts;
    opts.burn_in = sc.burn_in;
    opts.record_stride = sc.record_stride > 0 ? sc.record_stride : 100;
    const auto res = simulate_ctmc(net, params, sc.events, need_seed(sc), opts);
    if (sc.format == "csv") {
        auto out = open_csv(sc, "ctmc.csv");
        write_path_csv(out, {"n", "w", "lambda"},
                       {net.num_routes(), net.num_resources(), net.num_routes()});
        for (std::size_t k = 0; k < res.path.t.size(); ++k)
            row(out, res.path.t[k], {&res.path.n[k], &res.path.w[k], &res.path.lambda[k]});
    }
    json out;
    out["mean_n"] = vec_to(res.mean_n);
    out["mean_w"] = vec_to(res.mean_w);
    out["events"] = res.events;
    out["total_time"] = res.total_time;
    out["cache_hits"] = res.cache_hits;
    out["cache_misses"] = res.cache_misses;
    emit_summary(sc, "ctmc", out);
    return 0;
}

int cmd_fluid(const Scenario& sc) {
    const Network& net = need_network(sc);
    const TrafficParams& params = need_traffic(sc);
    Vec n0 = sc.counts ? *sc.counts : Vec(Vec::Ones(net.num_routes()));
    FluidOptions opts;
    opts.record_stride = sc.record_stride > 0 ? sc.record_stride : 100;
    const auto res = integrate_fluid(net, params, n0, sc.T, sc.h, opts);
    if (sc.format == "csv") {
        auto out = open_csv(sc, "fluid.csv");
        out << "time";
        for (int i = 1; i <= net.num_routes(); ++i) out << ",n_" << i;
        out << ",manifold_distance\n";
        for (std::size_t k = 0; k < res.t.size(); ++k) {
            out << res.t[k];
            for (int i = 0; i < net.num_routes(); ++i) out << "," << res.n[k][i];
            out << "," << res.manifold_distance[k] << "\n";
        }
    }
    json out;
    out["terminal_n"] = vec_to(res.terminal_n);
    out["terminal_manifold_distance"] = res.terminal_manifold_distance;
    out["max_lyapunov_increase"] = res.max_lyapunov_increase;
    out["terminal_lyapunov_gap"] = res.terminal_lyapunov_gap;
    emit_summary(sc, "fluid", out);
    return 0;
}

int cmd_queue(const Scenario& sc, const std::string& kind_override) {
    Scenario::Queue q = sc.queue.value_or(Scenario::Queue{});
    if (!kind_override.empty()) q.kind = kind_override;
    const std::uint64_t seed = need_seed(sc);

    QueueSimOptions opts;
    opts.burn_in = sc.burn_in;
    opts.record_stride = sc.record_stride > 0 ? sc.record_stride : 100;

    json out;
    QueuePath path;
    if (q.kind == "mm1") {
        opts.n_batches = 20;
        const auto res = simulate_mm1(q.nu, q.mu, sc.events, seed, opts);
        path = res.path;
        const auto law = mm1_stationary(q.nu / q.mu);
        out["mean_count"] = res.mean_count;
        out["exact_mean"] = law.mean();
        stats::Moments batches;
        for (double b : res.batch_means) batches.add(b);
        out["mean_std_error"] = batches.std_error();
        out["mean_workload"] = res.mean_workload;
        out["events"] = res.events;
    } else if (q.kind == "mg1ps") {
        const WorkDistribution work =
            q.work ? *q.work : WorkDistribution::exponential(q.mu);
        const auto res = simulate_mg1_ps(q.nu, work, sc.T, seed, opts);
        path = res.path;
        out["mean_count"] = res.mean_count;
        out["exact_mean"] = mm1_stationary(q.nu * work.mean).mean();
        out["mean_workload"] = res.mean_workload;
        out["residual_samples"] = res.residual_samples.size();
        if (!res.residual_samples.empty()) {
            const double ks = stats::ks_distance(res.residual_samples, [&](double x) {
                return forward_recurrence_cdf(work, x);
            });
            out["residual_ks_vs_forward_recurrence"] = ks;
        }
    } else {  // rbm
        path = rbm1_path(q.rho, q.sigma2, sc.T, sc.h, seed, 0.0,
                         sc.record_stride > 0 ? sc.record_stride : 1000);
        const double avg = rbm1_time_average(q.rho, q.sigma2, sc.T, sc.h, seed, 0.0, sc.burn_in);
        out["time_average_w"] = avg;
        out["exact_mean"] = rbm1_stationary_mean(q.rho, q.sigma2);
    }

    if (sc.format == "csv") {
        auto csv = open_csv(sc, "queue.csv");
        csv << "time,W,N,U\n";
        for (std::size_t k = 0; k < path.t.size(); ++k)
            csv << path.t[k] << "," << path.W[k] << "," << path.N[k] << "," << path.U[k] << "\n";
    }
    out["kind"] = q.kind;
    emit_summary(sc, "queue", out);
    return 0;
}

int cmd_route_choice(const Scenario& sc) {
    const Network& net = need_network(sc);
    if (net.topology != Topology::Parallel4)
        throw ValidationError("route-choice: scenario must use the parallel4 preset");
    const TrafficParams& params = need_traffic(sc);

    RouteChoiceConfig cfg;
    cfg.T = sc.T;
    cfg.h = sc.h;
    cfg.seed = need_seed(sc);
    cfg.burn_in = sc.burn_in;
    cfg.record_stride = sc.record_stride > 0 ? sc.record_stride : 1000;
    cfg.record_arrivals = sc.mode == ArrivalMode::PoissonJobs;

    const auto res = simulate_route_choice(params.rho, net.C, params.sigma2, sc.mode, cfg);
    if (sc.format == "csv") {
        auto out = open_csv(sc, "route_choice.csv");
        write_path_csv(out, {"m", "lambda", "q", "d"}, {4, 4, 4, 4});
        for (std::size_t k = 0; k < res.path.t.size(); ++k)
            row(out, res.path.t[k], {&res.path.m[k], &res.path.lambda[k], &res.path.q[k],
                                     &res.path.d[k]});
        if (cfg.record_arrivals) {
            auto arr = open_csv(sc, "arrivals.csv");
            arr << "time,source,line\n";
            for (const auto& a : res.arrivals)
                arr << a.t << "," << a.source + 1 << "," << a.line + 1 << "\n";
        }
    }
    json out;
    out["mean_m"] = vec_to(res.mean_m);
    out["mean_d"] = vec_to(res.mean_d);
    out["virtual_dual_mean_diagnostic"] = vec_to(res.virtual_dual_mean);
    out["chosen_counts"] = res.chosen_counts;
    out["trend_slope"] = res.total_m_trend.slope;
    out["trend_t_stat"] = res.total_m_trend.t_stat;
    const auto law = zeta_params(params.rho, net.C, params.sigma2);
    out["law_mean_delay"] = vec_to(law.mean_delay);
    emit_summary(sc, "route_choice", out);
    return 0;
}

int cmd_compare(const Scenario& sc) {
    const Network& net = need_network(sc);
    const TrafficParams& params = need_traffic(sc);
    MotorwaySimConfig cfg = sim_config(sc);
    cfg.record_events = true;

    json out;
    json policies = json::array();
    for (PolicyKind p : {PolicyKind::ProportionalFair, PolicyKind::UpstreamPriority,
                         PolicyKind::DownstreamPriority}) {
        const auto res = simulate_motorway(net, params, p, sc.mode, cfg);
        json jp = motorway_summary(net, res);
        jp["policy"] = policy_name(p);
        policies.push_back(jp);
        if (sc.format == "csv") {
            write_motorway_csv(sc, "compare_" + policy_name(p) + ".csv", net, res.path);
            if (sc.mode == ArrivalMode::PoissonJobs) {
                auto ev = open_csv(sc, "compare_" + policy_name(p) + "_events.csv");
                ev << "time,total_m\n";
                const auto& r = res.reps[0];
                for (std::size_t k = 0; k < r.event_t.size(); ++k)
                    ev << r.event_t[k] << "," << r.event_total_m[k] << "\n";
            }
        }
    }
    out["policies"] = policies;
    emit_summary(sc, "compare", out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"proportionally fair ramp metering and bandwidth sharing toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string queue_kind;

    auto* c_alloc = app.add_subcommand("allocate", "solve the fair allocation for counts n");
    c_alloc->add_option("--n", args.counts, "route counts, comma separated");
    auto* c_stat = app.add_subcommand("stationary", "closed-form stationary laws");
    auto* c_sim = app.add_subcommand("simulate", "metered motorway simulation");
    auto* c_ctmc = app.add_subcommand("ctmc", "connection-level chain simulation");
    auto* c_fluid = app.add_subcommand("fluid", "fluid-model integration");
    auto* c_queue = app.add_subcommand("queue", "single-queue laboratory");
    c_queue->add_option("--kind", queue_kind, "mm1|mg1ps|rbm (overrides scenario)");
    auto* c_route = app.add_subcommand("route-choice", "parallel roads with route choices");
    auto* c_comp = app.add_subcommand("compare", "same arrival stream under all policies");

    for (auto* cmd : {c_alloc, c_stat, c_sim, c_ctmc, c_fluid, c_queue, c_route, c_comp})
        add_common(cmd, args);

    CLI11_PARSE(app, argc, argv);

    try {
        const Scenario sc = resolve(args);
        if (c_alloc->parsed()) return cmd_allocate(sc);
        if (c_stat->parsed()) return cmd_stationary(sc);
        if (c_sim->parsed()) return cmd_simulate(sc);
        if (c_ctmc->parsed()) return cmd_ctmc(sc);
        if (c_fluid->parsed()) return cmd_fluid(sc);
        if (c_queue->parsed()) return cmd_queue(sc, queue_kind);
        if (c_route->parsed()) return cmd_route_choice(sc);
        if (c_comp->parsed()) return cmd_compare(sc);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
