#include "fairmeter/scenario.hpp"

#include <fstream>

namespace fairmeter {

using nlohmann::json;

namespace {

Vec vec_from(const json& j, const char* what) {
    if (!j.is_array()) throw ValidationError(std::string("scenario: ") + what + " must be an array");
    Vec v(j.size());
    for (std::size_t k = 0; k < j.size(); ++k) v[k] = j[k].get<double>();
    return v;
}

json vec_to(const Vec& v) {
    json arr = json::array();
    for (int k = 0; k < v.size(); ++k) arr.push_back(v[k]);
    return arr;
}

Network network_from(const json& j) {
    if (j.contains("preset")) {
        const std::string preset = j.at("preset").get<std::string>();
        const Vec C = vec_from(j.at("C"), "network.C");
        if (preset == "linear") return linear_network(C);
        if (preset == "tree6") return tree6_network(C);
        if (preset == "parallel4") return parallel_roads_virtual(C).physical;
        if (preset == "tree") {
            std::vector<int> parent;
            for (const auto& e : j.at("parent")) parent.push_back(e.get<int>());
            return tree_network(parent, C);
        }
        throw ValidationError("scenario: unknown network preset '" + preset + "'");
    }
    const json& ja = j.at("A");
    const int J = static_cast<int>(ja.size());
    if (J == 0) throw ValidationError("scenario: network.A is empty");
    const int I = static_cast<int>(ja[0].size());
    Mat A(J, I);
    for (int r = 0; r < J; ++r) {
        if (static_cast<int>(ja[r].size()) != I)
            throw ValidationError("scenario: network.A rows have unequal length");
        for (int c = 0; c < I; ++c) A(r, c) = ja[r][c].get<double>();
    }
    return validate(A, vec_from(j.at("C"), "network.C"));
}

json network_to(const Network& net) {
    // emit the canonical inline form; presets resolve to their matrices
    json j;
    json rows = json::array();
    for (int r = 0; r < net.num_resources(); ++r) {
        json row = json::array();
        for (int c = 0; c < net.num_routes(); ++c)
            row.push_back(static_cast<int>(net.A(r, c)));
        rows.push_back(row);
    }
    j["A"] = rows;
    j["C"] = vec_to(net.C);
    return j;
}

WorkDistribution work_from(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "exponential") return WorkDistribution::exponential(j.at("mu").get<double>());
    if (kind == "deterministic")
        return WorkDistribution::deterministic(j.at("mean").get<double>());
    if (kind == "general") {
        std::vector<double> xs, Fs;
        for (const auto& e : j.at("x")) xs.push_back(e.get<double>());
        for (const auto& e : j.at("F")) Fs.push_back(e.get<double>());
        return WorkDistribution::general(std::move(xs), std::move(Fs));
    }
    throw ValidationError("scenario: unknown work distribution kind '" + kind + "'");
}

json work_to(const WorkDistribution& w) {
    json j;
    switch (w.kind) {
        case WorkDistribution::Kind::Exponential:
            j["kind"] = "exponential";
            j["mu"] = w.mu();
            break;
        case WorkDistribution::Kind::Deterministic:
            j["kind"] = "deterministic";
            j["mean"] = w.mean;
            break;
        case WorkDistribution::Kind::General:
            j["kind"] = "general";
            j["x"] = w.xs;
            j["F"] = w.Fs;
            break;
    }
    return j;
}

}  // namespace

std::string policy_name(PolicyKind p) {
    switch (p) {
        case PolicyKind::ProportionalFair: return "pf";
        case PolicyKind::UpstreamPriority: return "upstream";
        case PolicyKind::DownstreamPriority: return "downstream";
    }
    return "pf";
}

PolicyKind policy_from_name(const std::string& s) {
    if (s == "pf") return PolicyKind::ProportionalFair;
    if (s == "upstream") return PolicyKind::UpstreamPriority;
    if (s == "downstream") return PolicyKind::DownstreamPriority;
    throw ValidationError("scenario: unknown policy '" + s + "' (pf|upstream|downstream)");
}

std::string mode_name(ArrivalMode m) {
    return m == ArrivalMode::Brownian ? "brownian" : "jobs";
}

ArrivalMode mode_from_name(const std::string& s) {
    if (s == "brownian") return ArrivalMode::Brownian;
    if (s == "jobs" || s == "poisson_jobs") return ArrivalMode::PoissonJobs;
    throw ValidationError("scenario: unknown mode '" + s + "' (brownian|jobs)");
}

Scenario Scenario::from_json(const json& j) {
    Scenario sc;
    if (j.contains("network")) sc.network = network_from(j.at("network"));
    if (j.contains("traffic")) {
        const json& t = j.at("traffic");
        const double sigma2 = t.value("sigma2", 1.0);
        if (t.contains("nu")) {
            sc.traffic = make_traffic(vec_from(t.at("nu"), "traffic.nu"),
                                      vec_from(t.at("mu"), "traffic.mu"), sigma2);
        } else if (t.contains("rho")) {
            sc.traffic = make_traffic_from_loads(vec_from(t.at("rho"), "traffic.rho"), sigma2);
        } else {
            throw ValidationError("scenario: traffic needs nu/mu or rho");
        }
        if (sc.network &&
            sc.traffic->rho.size() != sc.network->num_routes())
            throw ValidationError("scenario: traffic dimension does not match the network");
    }
    sc.model = j.value("model", std::string("motorway"));
    if (sc.model != "flow" && sc.model != "motorway")
        throw ValidationError("scenario: model must be flow or motorway");
    if (j.contains("policy")) sc.policy = policy_from_name(j.at("policy").get<std::string>());
    if (j.contains("mode")) sc.mode = mode_from_name(j.at("mode").get<std::string>());

    if (j.contains("queue")) {
        Queue q;
        const json& jq = j.at("queue");
        q.kind = jq.value("kind", std::string("mm1"));
        if (q.kind != "mm1" && q.kind != "mg1ps" && q.kind != "rbm")
            throw ValidationError("scenario: queue.kind must be mm1, mg1ps or rbm");
        q.nu = jq.value("nu", 0.8);
        q.mu = jq.value("mu", 1.0);
        q.rho = jq.value("rho", q.nu / q.mu);
        q.sigma2 = jq.value("sigma2", 1.0);
        if (jq.contains("work")) q.work = work_from(jq.at("work"));
        sc.queue = q;
    }

    if (j.contains("sim")) {
        const json& s = j.at("sim");
        sc.T = s.value("T", sc.T);
        sc.h = s.value("h", sc.h);
        sc.events = s.value("T_events", sc.events);
        if (s.contains("seed")) sc.seed = s.at("seed").get<std::uint64_t>();
        sc.burn_in = s.value("burn_in", sc.burn_in);
        sc.replications = s.value("replications", sc.replications);
        sc.record_stride = s.value("record_stride", sc.record_stride);
        if (sc.burn_in < 0 || sc.burn_in >= 1)
            throw ValidationError("scenario: burn_in must lie in [0, 1)");
        if (sc.replications < 1) throw ValidationError("scenario: replications must be >= 1");
    }
    if (j.contains("n")) sc.counts = vec_from(j.at("n"), "n");
    if (j.contains("output")) {
        sc.out_dir = j.at("output").value("dir", sc.out_dir);
        sc.format = j.at("output").value("format", sc.format);
        if (sc.format != "csv" && sc.format != "json")
            throw ValidationError("scenario: output.format must be csv or json");
    }
    return sc;
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("scenario: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("scenario: JSON parse error: ") + e.what());
    }
    return from_json(j);
}

json Scenario::resolved() const {
    json j;
    if (network) j["network"] = network_to(*network);
    if (traffic) {
        json t;
        t["nu"] = vec_to(traffic->nu);
        t["mu"] = vec_to(traffic->mu);
        t["sigma2"] = traffic->sigma2;
        j["traffic"] = t;
    }
    j["model"] = model;
    j["policy"] = policy_name(policy);
    j["mode"] = mode_name(mode);
    if (queue) {
        json q;
        q["kind"] = queue->kind;
        q["nu"] = queue->nu;
        q["mu"] = queue->mu;
        q["rho"] = queue->rho;
        q["sigma2"] = queue->sigma2;
        if (queue->work) q["work"] = work_to(*queue->work);
        j["queue"] = q;
    }
    json s;
    s["T"] = T;
    s["h"] = h;
    s["T_events"] = events;
    if (seed) s["seed"] = *seed;
    s["burn_in"] = burn_in;
    s["replications"] = replications;
    s["record_stride"] = record_stride;
    j["sim"] = s;
    if (counts) j["n"] = vec_to(*counts);
    json o;
    o["dir"] = out_dir;
    o["format"] = format;
    j["output"] = o;
    return j;
}

}  // namespace fairmeter
