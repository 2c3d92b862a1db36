// tdid: command-line front end for condensed/deployed TDIDs.
//
// Exit codes: 0 success, 1 domain error, 2 I/O, 3 oracle mismatch,
// 4 resource cap.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tdid/tdid.hpp"

namespace {

enum Exit { ok = 0, domain = 1, io = 2, mismatch = 3, capacity = 4 };

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

tdid::TimeSequence parse_seq(const std::string& s) {
    std::vector<tdid::TimeIndex> idx;
    for (const auto& part : split(s, ',')) idx.push_back(static_cast<tdid::TimeIndex>(tdid::text::parse_int(part, 0)));
    return tdid::TimeSequence(std::move(idx));
}

// Collects --retime / --drop options in command-line order.
struct EditOptions {
    CLI::Option* retime = nullptr;
    CLI::Option* drop = nullptr;
    std::vector<std::string> retimes;
    std::vector<std::string> drops;

    void add(CLI::App* app) {
        retime = app->add_option("--retime", retimes, "VAR=SEQ, e.g. all=1,3 (repeatable)")->take_all();
        drop = app->add_option("--drop", drops, "comma-separated variables to remove (repeatable)")->take_all();
    }

    std::vector<tdid::AbstractionEdit> collect(const CLI::App* app) const {
        std::vector<tdid::AbstractionEdit> edits;
        std::size_t r = 0, d = 0;
        for (const CLI::Option* o : app->parse_order()) {
            if (o == retime) {
                const std::string& arg = retimes.at(r++);
                auto eq = arg.find('=');
                if (eq == std::string::npos || eq == 0)
                    throw tdid::AbstractionError("--retime expects VAR=SEQ, got '" + arg + "'");
                edits.push_back(tdid::AbstractionEdit::retime(arg.substr(0, eq), parse_seq(arg.substr(eq + 1))));
            } else if (o == drop) {
                std::set<std::string> vars;
                for (const auto& v : split(drops.at(d++), ','))
                    if (!v.empty()) vars.insert(v);
                edits.push_back(tdid::AbstractionEdit::remove(std::move(vars)));
            }
        }
        return edits;
    }
};

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) std::cout << content;
    else tdid::text::write_file(out_path, content);
}

std::uint64_t oracle_cap() {
    tdid::BruteForceOptions defaults;
    const char* env = std::getenv("TDID_ORACLE_CAP");
    if (!env || !*env) return defaults.cap;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
        return v;
    } catch (const std::exception&) {
        throw tdid::Error(std::string("TDID_ORACLE_CAP must be a nonnegative integer, got '") + env + "'");
    }
}

int cmd_validate(const std::string& path) {
    const auto model = tdid::load_model(path);
    const auto violations = tdid::validate(model);
    for (const auto& v : violations) std::cerr << v << "\n";
    return violations.empty() ? ok : domain;
}

int cmd_deploy(const std::string& path, const std::string& out, bool emit_dot, bool keep_barren) {
    const auto did = tdid::deploy(tdid::load_model(path), {!keep_barren});
    emit(out, tdid::serialize_deployed(did));
    if (emit_dot) {
        std::string dot_path = "out.dot";
        if (!out.empty()) dot_path = std::filesystem::path(out).replace_extension(".dot").string();
        tdid::text::write_file(dot_path, tdid::to_dot(did));
    }
    return ok;
}

int cmd_solve(const std::vector<std::string>& paths, bool oracle, const std::string& out) {
    tdid::Json all = tdid::Json::array();
    int status = ok;
    for (const auto& path : paths) {
        const auto did = tdid::deploy(tdid::load_model(path));
        const auto policy = tdid::solve(did);
        if (oracle) {
            const auto reference = tdid::brute_force(did, {oracle_cap()});
            const bool same_value = std::abs(reference.meu - policy.meu) <= tdid::utility_tolerance;
            if (!same_value || !tdid::policies_agree(did, policy, reference)) {
                std::cerr << path << ": oracle mismatch (solve " << tdid::text::format_real(policy.meu)
                          << ", brute force " << tdid::text::format_real(reference.meu) << ")\n";
                status = mismatch;
            }
        }
        auto j = tdid::policy_json(did, policy);
        if (paths.size() > 1) {
            tdid::Json entry;
            entry["file"] = path;
            for (auto it = j.begin(); it != j.end(); ++it) entry[it.key()] = it.value();
            all.push_back(std::move(entry));
        } else {
            all = std::move(j);
        }
    }
    emit(out, tdid::dump_json(all));
    return status;
}

int cmd_abstract(const std::string& path, const std::vector<tdid::AbstractionEdit>& edits, const std::string& out) {
    emit(out, tdid::serialize_model(tdid::apply_edits(tdid::load_model(path), edits)));
    return ok;
}

struct SelectOptions {
    std::string kb;
    std::string urgency;
    double t0 = 0.0;
    std::optional<double> deadline;
    std::vector<std::string> tags;
    double alpha = 0.0;
    double beta = 0.0;
    bool measure = false;
    bool persist = false;
    std::string out;

    void add(CLI::App* app) {
        app->add_option("kb", kb, "knowledge-base directory")->required();
        app->add_option("--urgency", urgency,
                        "utility lost to delay, in utility units: linear:RATE | step:DEADLINE,PENALTY | table:T=U,...")
            ->required();
        app->add_option("--t0", t0, "current deliberation time (seconds)");
        app->add_option("--deadline", deadline, "drop models whose cost exceeds this (seconds)");
        app->add_option("--tag", tags, "required model tag (repeatable)")->take_all();
        app->add_option("--alpha", alpha, "analytic cost: seconds per deployed CPT entry");
        app->add_option("--beta", beta, "analytic cost: fixed seconds");
        app->add_flag("--measure", measure, "time actual solves and use them as costs");
        app->add_flag("--persist", persist, "write updated manifests back to the KB");
        app->add_option("-o,--out", out, "output file (default stdout)");
    }

    tdid::ProblemSpec spec(std::vector<tdid::AbstractionEdit> edits, bool solve_winner) const {
        tdid::ProblemSpec p;
        p.urgency = tdid::UrgencyFunction::parse(urgency);
        p.t0 = t0;
        p.deadline = deadline;
        p.required_tags = tags;
        p.cost_model = {tdid::CostModel::Mode::analytic, alpha, beta};
        p.edits = std::move(edits);
        p.measure = measure;
        p.solve_winner = solve_winner;
        return p;
    }
};

tdid::ConstructionResult run_select(const SelectOptions& o, std::vector<tdid::AbstractionEdit> edits, bool solve_winner) {
    auto result = tdid::construct(o.spec(std::move(edits), solve_winner), o.kb);
    if (o.persist) tdid::persist_manifests(result.entries);
    return result;
}

int cmd_select(const SelectOptions& o, std::vector<tdid::AbstractionEdit> edits) {
    const auto result = run_select(o, std::move(edits), true);
    emit(o.out, tdid::dump_json(tdid::construction_json(result)));
    return ok;
}

int cmd_evc(const SelectOptions& o) {
    const auto result = run_select(o, {}, false);
    emit(o.out, tdid::dump_json(tdid::selection_json(result.curve, result.model_id)));
    return ok;
}

int cmd_build_kb(const std::string& model_path, const std::string& lattice_path, const std::string& dir,
                 const std::string& prefix, const std::vector<std::string>& tags) {
    const auto model = tdid::load_model(model_path);
    const auto lattice = tdid::parse_lattice(tdid::text::read_file(lattice_path));
    const auto variants = tdid::enumerate_abstractions(model, lattice);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw tdid::IoError("cannot create '" + dir + "': " + ec.message());
    for (std::size_t k = 0; k < variants.size(); ++k) {
        const std::string id = prefix + "-" + std::to_string(k);
        const auto did = tdid::deploy(variants[k].model);
        tdid::KbEntry e;
        e.model_file = id + ".tdid";
        e.suite.quality = tdid::solve(did).meu;
        e.suite.space_size = std::max<std::size_t>(did.cpt_entries(), 1);
        e.suite.n_intervals = variants[k].model.master.size();
        e.has_space = e.has_intervals = true;
        e.suite.tags = tags;
        tdid::text::write_file((std::filesystem::path(dir) / e.model_file).string(),
                               tdid::serialize_model(variants[k].model));
        tdid::text::write_file((std::filesystem::path(dir) / (id + ".manifest")).string(),
                               "# " + variants[k].label() + "\n" + tdid::serialize_manifest(e));
        std::cout << id << "\t" << variants[k].label() << "\t" << tdid::text::format_real(*e.suite.quality) << "\n";
    }
    return ok;
}

int report(const std::exception& e) {
    std::cerr << "tdid: " << e.what() << "\n";
    return domain;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-critical dynamic influence diagrams"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tdid 1.0");

    std::string path, out;
    bool emit_dot = false, keep_barren = false, oracle = false;
    std::vector<std::string> paths;

    auto* validate = app.add_subcommand("validate", "check a condensed model");
    validate->add_option("model", path, "condensed model file")->required();

    auto* deploy = app.add_subcommand("deploy", "unroll a condensed model");
    deploy->add_option("model", path, "condensed model file")->required();
    deploy->add_option("-o,--out", out, "output file (default stdout)");
    deploy->add_flag("--emit-dot", emit_dot, "also write a Graphviz file next to the output (out.dot by default)");
    deploy->add_flag("--keep-barren", keep_barren, "skip barren-node elimination");

    auto* solve = app.add_subcommand("solve", "deploy and solve; prints the policy as JSON");
    solve->add_option("models", paths, "condensed model files")->required();
    solve->add_flag("--oracle", oracle, "cross-check against brute-force enumeration");
    solve->add_option("-o,--out", out, "output file (default stdout)");

    auto* abstract = app.add_subcommand("abstract", "apply abstraction edits in the given order");
    abstract->add_option("model", path, "condensed model file")->required();
    abstract->add_option("-o,--out", out, "output file (default stdout)");
    EditOptions abstract_edits;
    abstract_edits.add(abstract);

    auto* select = app.add_subcommand("select", "pick and solve the best model of a knowledge base");
    SelectOptions select_opts;
    select_opts.add(select);
    EditOptions select_edits;
    select_edits.add(select);

    auto* evc = app.add_subcommand("evc", "print the EVC curve of a knowledge base");
    SelectOptions evc_opts;
    evc_opts.add(evc);

    std::string lattice, kb_dir, prefix = "m";
    std::vector<std::string> tags;
    auto* build_kb = app.add_subcommand("build-kb", "write every lattice variant of a model as a KB entry");
    build_kb->add_option("model", path, "condensed model file")->required();
    build_kb->add_option("lattice", lattice, "abstraction lattice file")->required();
    build_kb->add_option("dir", kb_dir, "output KB directory")->required();
    build_kb->add_option("--prefix", prefix, "entry id prefix");
    build_kb->add_option("--tag", tags, "tag every entry (repeatable)")->take_all();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : domain;
    }

    try {
        if (*validate) return cmd_validate(path);
        if (*deploy) return cmd_deploy(path, out, emit_dot, keep_barren);
        if (*solve) return cmd_solve(paths, oracle, out);
        if (*abstract) return cmd_abstract(path, abstract_edits.collect(abstract), out);
        if (*select) return cmd_select(select_opts, select_edits.collect(select));
        if (*evc) return cmd_evc(evc_opts);
        if (*build_kb) return cmd_build_kb(path, lattice, kb_dir, prefix, tags);
    } catch (const tdid::IoError& e) {
        std::cerr << "tdid: " << e.what() << "\n";
        return io;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "tdid: " << e.what() << "\n";
        return io;
    } catch (const tdid::CapacityError& e) {
        std::cerr << "tdid: " << e.what() << "\n";
        return capacity;
    } catch (const tdid::DependencyError& e) {
        std::cerr << "tdid: " << e.what() << "\n";
        for (const auto& c : e.cpds()) std::cerr << "  re-specify: " << c << "\n";
        return domain;
    } catch (const std::exception& e) {
        return report(e);
    }
    return ok;
}
