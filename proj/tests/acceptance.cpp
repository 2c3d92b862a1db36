// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "support/random_models.hpp"
#include "tdid/tdid.hpp"

using namespace tdid;
namespace fs = std::filesystem;

namespace {

std::string sample(const std::string& name) { return std::string(TDID_SAMPLES_DIR) + "/" + name; }

/// Collects the first few failures of one criterion.
struct Check {
    std::vector<std::string> failures;
    void operator()(bool ok, const std::string& what) {
        if (!ok && failures.size() < 5) failures.push_back(what);
    }
};

using NodeSet = std::set<std::pair<std::string, NodeKind>>;
using ArcSet = std::set<std::pair<std::string, std::string>>;

NodeSet nodes_of(const DeployedDid& did) {
    NodeSet out;
    for (const auto& n : did.nodes) out.insert({n.name(), n.kind});
    return out;
}

ArcSet arcs_of(const DeployedDid& did) {
    ArcSet out;
    for (auto [p, c] : did.arcs()) out.insert({did.nodes[p].name(), did.nodes[c].name()});
    return out;
}

std::string at(const std::string& v, int i) { return v + "@" + std::to_string(i); }

// 1. The two-rate model deploys to the expected graph.
void two_rates(Check& check) {
    const auto did = deploy(load_model(sample("two_rates.tdid")));
    NodeSet nodes{{"X@1", NodeKind::chance}, {"X@2", NodeKind::copy},   {"X@3", NodeKind::chance},
                  {"X@4", NodeKind::copy},   {"Y@1", NodeKind::chance}, {"Y@2", NodeKind::chance},
                  {"Y@3", NodeKind::chance}, {"Y@4", NodeKind::chance}};
    ArcSet arcs{{"X@1", "X@2"}, {"X@3", "X@4"}, {"Y@2", "X@3"}};
    for (int i = 1; i <= 4; ++i) {
        nodes.insert({at("U", i), NodeKind::value});
        arcs.insert({at("X", i), at("Y", i)});
        arcs.insert({at("Y", i), at("U", i)});
    }
    check(nodes_of(did) == nodes, "node set differs");
    check(arcs_of(did) == arcs, "arc set differs");
    for (const char* c : {"X@2", "X@4"}) {
        const auto& n = did.nodes[*did.find(c)];
        check(n.table == std::vector<double>{1, 0, 0, 1}, std::string(c) + " is not an identity copy");
    }
}

// 2. Cardiac model: three replicated slices joined by the lag arcs.
void cardiac_slices(Check& check) {
    const auto m = load_model(sample("cardiac.tdid"));
    check(m.master == TimeSequence({1, 2, 3}), "master is not 1 2 3");
    for (const auto& v : m.variables) check(v.times == m.master, v.name + " is not on every index");
    const auto did = deploy(m);
    NodeSet nodes;
    ArcSet arcs;
    for (int s = 1; s <= 3; ++s) {
        for (const auto& v : m.variables) {
            const NodeKind k = v.kind == VariableKind::decision ? NodeKind::decision
                               : v.kind == VariableKind::value  ? NodeKind::value
                                                                : NodeKind::chance;
            nodes.insert({at(v.name, s), k});
        }
        for (const auto& a : m.arcs) {
            if (a.kind == ArcKind::instantaneous) arcs.insert({at(a.src, s), at(a.dst, s)});
            else if (s > 1) arcs.insert({at(a.src, s - 1), at(a.dst, s)});
        }
    }
    check(nodes_of(did) == nodes, "node set differs");
    check(arcs_of(did) == arcs, "arc set differs");
    check(arcs.size() == 3 * 7 + 2 * 3, "unexpected arc count");
}

// 3. Space and time abstraction of the cardiac model.
void cardiac_abstractions(Check& check) {
    const auto m = load_model(sample("cardiac.tdid"));
    const auto dropped = abstract_space(m, {"CD"});
    std::set<std::string> names;
    for (const auto& v : dropped.variables) names.insert(v.name);
    check(names == std::set<std::string>{"cr", "treatment", "cbf", "U_surv"}, "drop CD kept the wrong variables");
    const auto d = deploy(dropped);
    for (const auto& n : d.nodes) check(n.base != "CD" && n.base != "poa" && n.base != "U_cd", n.name() + " survived");
    for (int s = 1; s <= 3; ++s)
        for (const char* v : {"cr", "treatment", "cbf", "U_surv"}) check(d.find(at(v, s)).has_value(), at(v, s) + " missing");

    const auto coarse = deploy(abstract_time_all(m, TimeSequence({1, 3})));
    for (const auto& n : coarse.nodes)
        check(n.slice != 2 || n.kind == NodeKind::copy, n.name() + " is a probabilistic slice-2 node");
    for (const auto& v : m.variables)
        if (v.kind != VariableKind::value) check(coarse.find(at(v.name, 3)).has_value(), at(v.name, 3) + " missing");
}

// 4. solve agrees with the brute-force oracle.
void oracle(Check& check) {
    std::mt19937_64 rng(4);
    int total = 0, core = 0;
    auto run = [&](const DeployedDid& did) {
        const auto p = solve(did);
        const auto b = brute_force(did);
        check(testkit::non_value_nodes(did) <= 8, "model too large");
        check(std::abs(p.meu - b.meu) <= 1e-9, "MEU " + text::format_real(p.meu) + " vs " + text::format_real(b.meu));
        check(policies_agree(did, p, b), "policies differ on a reachable information state");
        check(std::abs(evaluate_policy(did, b) - b.meu) <= 1e-9, "oracle policy does not score its MEU");
    };
    auto needs_core = [](const DeployedDid& did) {
        try {
            solve(did, {1});
            return false;
        } catch (const CapacityError&) {
            return true;
        }
    };
    while (total < 200) {
        const auto did = deploy(testkit::random_model(rng));
        core += needs_core(did);
        run(did);
        ++total;
    }
    // Top up with models that need joint enumeration of a decision group.
    while (core < 25) {
        const auto did = deploy(testkit::random_model(rng));
        if (!needs_core(did)) continue;
        run(did);
        ++core;
        ++total;
    }
    std::printf("  %d models, %d solved through joint enumeration\n", total, core);
}

// 5. MEU invariances.
void invariances(Check& check) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 200; ++k) {
        auto m = testkit::random_model(rng);
        const auto did = deploy(m);
        const auto base = solve(did);

        check(std::abs(solve(deploy(m, {false})).meu - base.meu) <= 1e-9, "barren elimination changed MEU");
        check(std::abs(solve(collapse_copies(did)).meu - base.meu) <= 1e-9, "copy collapse changed MEU");

        // Shuffle declarations; decisions keep their relative order.
        auto shuffled = m;
        std::shuffle(shuffled.variables.begin(), shuffled.variables.end(), rng);
        std::vector<TemporalVariable> decisions;
        for (const auto& v : m.variables)
            if (v.kind == VariableKind::decision) decisions.push_back(v);
        std::size_t next = 0;
        for (auto& v : shuffled.variables)
            if (v.kind == VariableKind::decision) v = decisions[next++];
        std::shuffle(shuffled.cpds.begin(), shuffled.cpds.end(), rng);
        std::shuffle(shuffled.utilities.begin(), shuffled.utilities.end(), rng);
        check(std::abs(solve(deploy(shuffled)).meu - base.meu) <= 1e-9, "declaration order changed MEU");

        const double shift = std::uniform_real_distribution<double>(-10, 10)(rng);
        auto moved = did;
        for (double& x : moved.nodes[moved.super_value.front()].table) x += shift;
        const auto p = solve(moved);
        check(std::abs(p.meu - (base.meu + shift)) <= 1e-9, "utility shift did not shift MEU");
        check(policies_agree(did, p, base), "utility shift changed the policy");
    }
}

SuiteEntry entry(std::string id, double q, double cost) {
    SuiteEntry e;
    e.id = std::move(id);
    e.quality = q;
    e.cost_time = cost;
    return e;
}

// 6. Hand-evaluated EVC on the two-model suite.
void worked_evc(Check& check) {
    const std::vector<SuiteEntry> suite{entry("m1", 5, 1), entry("m2", 9, 4)};
    const auto lin = UrgencyFunction::linear(1);
    check(evc(suite, lin, 1, 1) == 0.0, "EVC(1) != 0");
    check(evc(suite, lin, 1, 4) == 1.0, "EVC(4) != 1");
    const auto c = select(suite, lin, 1);
    check(c.t_star == 4.0, "t* != 4");
    check(suite[c.best].id == "m2", "m** != m2");
    check(c.points.size() == 2 && c.points[1].uc == 5.0, "u_c != 5");
    const auto fast = select(suite, UrgencyFunction::linear(10), 1);
    check(fast.t_star == 1.0, "t* != 1 at rate 10");
    check(suite[fast.best].id == "m1", "m** != m1 at rate 10");

    ProblemSpec spec;
    spec.urgency = lin;
    spec.t0 = 1;
    const auto r = construct(spec, sample("kb-worked"));
    check(r.model_id == "m2" && r.curve.t_star == 4.0, "knowledge-base run disagrees");
}

// 7. Properties of selection on random suites.
void selection_properties(Check& check) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> size(1, 8), cents(0, 1000);
    std::uniform_real_distribution<double> unit(0, 1);
    for (int k = 0; k < 200; ++k) {
        std::vector<SuiteEntry> suite;
        const int n = size(rng);
        for (int i = 0; i < n; ++i) suite.push_back(entry("m" + std::to_string(i), 20 * unit(rng), cents(rng) / 100.0));
        double t0 = suite[0].cost_time;
        for (const auto& e : suite) t0 = std::min(t0, e.cost_time);
        double t_max = t0;
        for (const auto& e : suite) t_max = std::max(t_max, e.cost_time);

        const auto lin = UrgencyFunction::linear(5 * unit(rng));
        double prev = -1e300;
        for (int c = static_cast<int>(std::lround(t0 * 100)); c <= 1100; ++c) {
            const double q = quality(suite, c / 100.0).value;
            check(q >= prev, "Q decreased");
            prev = q;
        }
        check(evc(suite, lin, t0, t0) == 0.0, "EVC(t0) != 0");

        const auto idle = select(suite, UrgencyFunction::linear(0), t0);
        double best_q = 0;
        for (const auto& e : suite) best_q = std::max(best_q, *e.quality);
        check(*suite[idle.best].quality == best_q, "zero urgency missed the best model");

        // Dense grid on the cost lattice; the deadline sits between grid points.
        const auto step = UrgencyFunction::step(cents(rng) / 100.0 + 0.005, 30 * unit(rng));
        const auto curve = select(suite, step, t0);
        double grid_t = t0, grid_v = -1e300;
        for (int c = static_cast<int>(std::lround(t0 * 100)); c <= static_cast<int>(std::lround(t_max * 100)); ++c) {
            const double t = c / 100.0;
            const double v = evc(suite, step, t0, t);
            if (v > grid_v + evc_tolerance) grid_v = v, grid_t = t;
        }
        check(std::abs(curve.t_star - grid_t) <= 1e-12, "step t* differs from the grid argmax");

        // Changing the time unit leaves the choice alone.
        const double scale = 0.25 + 4 * unit(rng);
        auto scaled = suite;
        for (auto& e : scaled) e.cost_time *= scale;
        const double rate = 5 * unit(rng);
        const auto a = select(suite, UrgencyFunction::linear(rate), t0);
        const auto b = select(scaled, UrgencyFunction::linear(rate / scale), t0 * scale);
        check(a.best == b.best, "rescaling time changed the selected model");
    }
}

// 8. Cardiac knowledge base: selection against an independent EVC table.
void cardiac_pipeline(Check& check) {
    const fs::path kb = sample("kb-cardiac");
    const double alpha = 0.1;
    const double t0 = 0.0;
    struct Row {
        std::string id;
        double meu;
        double cost;
        Policy policy;
        DeployedDid did;
    };
    std::vector<Row> rows;
    for (const auto& f : fs::directory_iterator(kb)) {
        if (f.path().extension() != ".tdid") continue;
        auto did = deploy(load_model(f.path().string()));
        std::size_t space = 0;
        for (const auto& n : did.nodes) {
            if (n.kind != NodeKind::chance && n.kind != NodeKind::copy) continue;
            std::size_t cells = n.states.size();
            for (NodeId p : n.parents) cells *= did.nodes[p].states.size();
            space += cells;
        }
        // An explicit cost line in the manifest overrides the analytic cost.
        double cost = alpha * static_cast<double>(space);
        std::istringstream manifest(text::read_file(fs::path(f.path()).replace_extension(".manifest").string()));
        for (std::string line; std::getline(manifest, line);)
            if (line.rfind("cost ", 0) == 0) cost = std::stod(line.substr(5));
        auto b = brute_force(did);
        rows.push_back({f.path().stem().string(), b.meu, cost, b, std::move(did)});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });
    check(rows.size() == 5, "expected four variants and a baseline");

    std::set<std::string> winners;
    for (double rate : {0.0, 1.0, 3.0, 4.0, 10.0}) {
        // EVC at t0 and at each cost; first strict maximum wins.
        auto best_at = [&](double t) {
            const Row* best = nullptr;
            for (const auto& r : rows)
                if (r.cost <= t && (!best || r.meu > best->meu)) best = &r;
            return best;
        };
        std::vector<double> ts{t0};
        for (const auto& r : rows) ts.push_back(r.cost);
        std::sort(ts.begin(), ts.end());
        const double q0 = best_at(t0)->meu;
        const Row* pick = nullptr;
        double top = -1e300;
        for (double t : ts) {
            if (t < t0) continue;
            const double v = (best_at(t)->meu - q0) - rate * (t - t0);
            if (v > top + 1e-9) top = v, pick = best_at(t);
        }

        ProblemSpec spec;
        spec.urgency = UrgencyFunction::linear(rate);
        spec.t0 = t0;
        spec.cost_model = {CostModel::Mode::analytic, alpha, 0.0};
        const auto r = construct(spec, kb);
        const std::string tag = " at rate " + text::format_real(rate);
        check(r.model_id == pick->id, "winner " + r.model_id + " vs " + pick->id + tag);
        for (const auto& p : r.curve.points)
            check(std::abs(p.evc - ((best_at(p.t)->meu - q0) - rate * (p.t - t0))) <= 1e-9, "EVC table differs" + tag);
        check(r.policy && std::abs(r.policy->meu - pick->meu) <= 1e-9, "winner MEU differs from its oracle" + tag);
        check(r.policy && r.deployed && policies_agree(*r.deployed, *r.policy, pick->policy),
              "winner policy differs from its oracle" + tag);
        winners.insert(r.model_id);
    }
    std::string list;
    for (const auto& w : winners) list += " " + w;
    std::printf("  winners:%s\n", list.c_str());
    check(winners.size() >= 3, "selection never moves between variants");
}

// 9. Round trips and stable reports.
void round_trips(Check& check) {
    std::vector<std::string> files;
    for (const auto& dir : {std::string(TDID_SAMPLES_DIR), std::string(TDID_SAMPLES_DIR) + "/kb-cardiac",
                            std::string(TDID_SAMPLES_DIR) + "/kb-worked", std::string(TDID_FIXTURES_DIR)})
        for (const auto& f : fs::directory_iterator(dir))
            if (f.path().extension() == ".tdid") files.push_back(f.path().string());
    std::sort(files.begin(), files.end());

    auto model_round_trip = [&](const CondensedTdid& m, const std::string& what) {
        const auto text = serialize_model(m);
        const auto back = parse_model(text);
        check(back == canonicalize(m), what + ": parse(serialize) differs");
        check(serialize_model(back) == text, what + ": serialize not stable");
        if (!validate(m).empty()) return;
        const auto did = deploy(m);
        const auto dtext = serialize_deployed(did);
        check(parse_deployed(dtext) == did, what + ": deployed round trip differs");
        check(serialize_deployed(parse_deployed(dtext)) == dtext, what + ": deployed text not stable");
    };
    for (const auto& f : files) model_round_trip(load_model(f), f);
    for (const auto& f : fs::directory_iterator(std::string(TDID_SAMPLES_DIR) + "/kb-cardiac"))
        if (f.path().extension() == ".manifest") {
            const auto src = text::read_file(f.path().string());
            const auto e = parse_manifest(src, f.path().stem().string());
            check(parse_manifest(serialize_manifest(e), e.suite.id).suite.quality == e.suite.quality,
                  f.path().string() + ": manifest round trip differs");
        }

    std::mt19937_64 rng(9);
    for (int k = 0; k < 100; ++k) model_round_trip(testkit::random_model(rng), "random model " + std::to_string(k));

    auto report = [] {
        ProblemSpec spec;
        spec.urgency = UrgencyFunction::linear(1);
        spec.cost_model = {CostModel::Mode::analytic, 0.1, 0.0};
        std::string out = dump_json(construction_json(construct(spec, sample("kb-cardiac"))));
        const auto did = deploy(load_model(sample("cardiac.tdid")));
        out += dump_json(policy_json(did, solve(did)));
        out += serialize_deployed(did);
        return out;
    };
    const auto first = report();
    for (int k = 0; k < 3; ++k) check(report() == first, "report bytes changed between runs");
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit;  // seconds
        std::function<void(Check&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "two-rate model deployment", 1, two_rates},
        {2, "cardiac slice replication", 1, cardiac_slices},
        {3, "cardiac space and time abstraction", 1, cardiac_abstractions},
        {4, "solver matches brute-force oracle", 60, oracle},
        {5, "MEU invariances", 1e300, invariances},
        {6, "worked EVC fixture", 1, worked_evc},
        {7, "selection properties on random suites", 30, selection_properties},
        {8, "cardiac knowledge-base pipeline", 10, cardiac_pipeline},
        {9, "round trips and stable reports", 1e300, round_trips},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(check);
        } catch (const std::exception& e) {
            check(false, std::string("exception: ") + e.what());
        }
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
        if (took.count() >= c.limit) check(false, "took " + text::format_real(took.count()) + " s");
        const bool ok = check.failures.empty();
        failed += !ok;
        std::printf("%s %d %s (%.3f s)\n", ok ? "PASS" : "FAIL", c.id, c.name, took.count());
        for (const auto& f : check.failures) std::printf("  %s\n", f.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
