#pragma once

// Knowledge base of abstracted models and the model construction pipeline:
// filter the KB by the problem requirements, select the model with the best
// EVC trade-off, apply optional edits, then deploy and solve the winner.

#include <chrono>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tdid/abstraction.hpp"
#include "tdid/deploy.hpp"
#include "tdid/error.hpp"
#include "tdid/format.hpp"
#include "tdid/metareason.hpp"
#include "tdid/solve.hpp"
#include "tdid/text.hpp"

namespace tdid {

/// A KB entry: the suite annotations plus where its model lives.
///
/// Manifest (`<id>.manifest`):
///   model <file>                 relative to the KB directory
///   quality <real|unsolved>
///   cost <real>                  seconds; estimated from the cost model when absent
///   space <int>                  deployed CPT entries; computed when absent
///   intervals <int>              |T_m|; computed when absent
///   measured <real>              recorded solve time
///   tags <tag> ...
struct KbEntry {
    SuiteEntry suite;
    std::string model_file;
    std::string manifest_path;
    bool has_cost = false;
    bool has_space = false;
    bool has_intervals = false;
};

inline KbEntry parse_manifest(std::string_view input, std::string id) {
    KbEntry e;
    e.suite.id = std::move(id);
    for (const auto& line : text::tokenize(input)) {
        const auto& t = line.tokens;
        const int n = line.number;
        auto one = [&]() -> const std::string& {
            if (t.size() != 2) throw ParseError(n, "'" + t[0] + "' takes exactly one value");
            return t[1];
        };
        if (t[0] == "model") {
            e.model_file = one();
        } else if (t[0] == "quality") {
            if (one() != "unsolved") e.suite.quality = text::parse_real(t[1], n);
        } else if (t[0] == "cost") {
            e.suite.cost_time = text::parse_real(one(), n);
            if (!(e.suite.cost_time >= 0.0)) throw ParseError(n, "cost must be nonnegative");
            e.has_cost = true;
        } else if (t[0] == "space") {
            long s = text::parse_int(one(), n);
            if (s < 1) throw ParseError(n, "space must be at least 1");
            e.suite.space_size = static_cast<std::size_t>(s);
            e.has_space = true;
        } else if (t[0] == "intervals") {
            long s = text::parse_int(one(), n);
            if (s < 1) throw ParseError(n, "intervals must be at least 1");
            e.suite.n_intervals = static_cast<std::size_t>(s);
            e.has_intervals = true;
        } else if (t[0] == "measured") {
            e.suite.measured_time = text::parse_real(one(), n);
        } else if (t[0] == "tags") {
            e.suite.tags.assign(t.begin() + 1, t.end());
        } else {
            throw ParseError(n, "unknown manifest directive '" + t[0] + "'");
        }
    }
    if (e.model_file.empty()) throw ParseError(1, "manifest of '" + e.suite.id + "' names no model");
    return e;
}

inline std::string serialize_manifest(const KbEntry& e) {
    std::string out = "model " + e.model_file + "\n";
    out += "quality " + (e.suite.quality ? text::format_real(*e.suite.quality) : std::string("unsolved")) + "\n";
    if (e.has_cost) out += "cost " + text::format_real(e.suite.cost_time) + "\n";
    if (e.has_space) out += "space " + std::to_string(e.suite.space_size) + "\n";
    if (e.has_intervals) out += "intervals " + std::to_string(e.suite.n_intervals) + "\n";
    if (e.suite.measured_time) out += "measured " + text::format_real(*e.suite.measured_time) + "\n";
    if (!e.suite.tags.empty()) {
        out += "tags";
        for (const auto& t : e.suite.tags) out += " " + t;
        out += "\n";
    }
    return out;
}

struct KnowledgeBase {
    std::filesystem::path dir;
    std::vector<KbEntry> entries;  // sorted by id

    CondensedTdid load(const KbEntry& e) const { return load_model((dir / e.model_file).string()); }
};

inline KnowledgeBase load_kb(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw IoError("knowledge base '" + dir.string() + "' is not a directory");
    KnowledgeBase kb{dir, {}};
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
        if (f.path().extension() != ".manifest") continue;
        auto e = parse_manifest(text::read_file(f.path().string()), f.path().stem().string());
        e.manifest_path = f.path().string();
        kb.entries.push_back(std::move(e));
    }
    std::sort(kb.entries.begin(), kb.entries.end(),
              [](const KbEntry& a, const KbEntry& b) { return a.suite.id < b.suite.id; });
    return kb;
}

/// Problem requirements and pipeline knobs.
struct ProblemSpec {
    UrgencyFunction urgency = UrgencyFunction::linear(0.0);
    double t0 = 0.0;
    std::optional<double> deadline;       // drop entries costing more
    std::vector<std::string> required_tags;
    CostModel cost_model;                 // for entries without a cost line
    std::vector<AbstractionEdit> edits;   // applied to the winner before solving
    bool measure = false;                 // re-time solves and use them as costs
    bool solve_winner = true;
};

struct ConstructionResult {
    std::vector<SuiteEntry> suite;     // filtered, solved suite used for selection
    std::vector<KbEntry> entries;      // KB entries behind `suite`, with updated annotations
    EvcCurve curve;
    std::string model_id;              // m**
    CondensedTdid model;               // m** after edits
    std::optional<DeployedDid> deployed;
    std::optional<Policy> policy;
};

inline ConstructionResult construct(const ProblemSpec& spec, const std::filesystem::path& kb_dir) {
    KnowledgeBase kb = load_kb(kb_dir);
    if (kb.entries.empty()) throw SelectionError("knowledge base '" + kb_dir.string() + "' is empty");

    // Fill in what the manifests leave open.
    for (auto& e : kb.entries) {
        const bool need_model = !e.suite.quality || !e.has_space || !e.has_intervals || spec.measure;
        if (!need_model) continue;
        const auto model = kb.load(e);
        const auto start = std::chrono::steady_clock::now();
        const auto did = deploy(model);
        if (!e.suite.quality || spec.measure) e.suite.quality = solve(did).meu;
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
        if (spec.measure) e.suite.measured_time = took.count();
        if (!e.has_space) e.suite.space_size = std::max<std::size_t>(did.cpt_entries(), 1);
        if (!e.has_intervals) e.suite.n_intervals = model.master.size();
        e.has_space = e.has_intervals = true;
    }
    for (auto& e : kb.entries) {
        if (spec.measure) {
            e.suite.cost_time = estimate_cost(e.suite, {CostModel::Mode::measured, 0.0, 0.0});
            e.has_cost = true;
        } else if (!e.has_cost) {
            e.suite.cost_time = estimate_cost(e.suite, spec.cost_model);
        }
    }

    ConstructionResult result;
    for (const auto& e : kb.entries) {
        bool ok = true;
        for (const auto& tag : spec.required_tags) ok = ok && e.suite.has_tag(tag);
        if (ok) result.entries.push_back(e);
    }
    if (result.entries.empty()) throw SelectionError("no knowledge-base model carries the required tags");
    if (spec.deadline) {
        std::erase_if(result.entries, [&](const KbEntry& e) { return e.suite.cost_time > *spec.deadline; });
        if (result.entries.empty())
            throw SelectionError("infeasible deadline: every model costs more than " + text::format_real(*spec.deadline));
    }
    for (const auto& e : result.entries) result.suite.push_back(e.suite);

    result.curve = select(result.suite, spec.urgency, spec.t0);
    const auto& winner = result.entries[result.curve.best];
    result.model_id = winner.suite.id;
    result.model = apply_edits(kb.load(winner), spec.edits);
    if (spec.solve_winner) {
        result.deployed = deploy(result.model);
        result.policy = solve(*result.deployed);
    }
    return result;
}

/// Rewrites the manifests of `entries` (single writer), keeping any leading
/// comment lines.
inline void persist_manifests(const std::vector<KbEntry>& entries) {
    for (const auto& e : entries) {
        std::string head;
        if (std::filesystem::exists(e.manifest_path)) {
            std::istringstream old(text::read_file(e.manifest_path));
            for (std::string line; std::getline(old, line) && line.rfind('#', 0) == 0;) head += line + "\n";
        }
        text::write_file(e.manifest_path, head + serialize_manifest(e));
    }
}

}  // namespace tdid
