#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "tdid/construct.hpp"
#include "tdid/deploy.hpp"
#include "tdid/metareason.hpp"
#include "tdid/solve.hpp"
#include "tdid/text.hpp"

namespace tdid {

using Json = nlohmann::ordered_json;

namespace detail {

inline void dump_json(const Json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
    const std::string close(static_cast<std::size_t>(indent), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                break;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad + Json(it.key()).dump() + ": ";
                dump_json(it.value(), out, indent + 2);
            }
            out += "\n" + close + "}";
            break;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                break;
            }
            // Arrays of scalars stay on one line.
            bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
            out += flat ? "[" : "[\n";
            bool first = true;
            for (const auto& e : j) {
                if (!first) out += flat ? ", " : ",\n";
                first = false;
                if (!flat) out += pad;
                dump_json(e, out, indent + 2);
            }
            out += flat ? "]" : "\n" + close + "]";
            break;
        }
        case Json::value_t::number_float: out += text::format_real(j.get<double>()); break;
        default: out += j.dump(); break;
    }
}

}  // namespace detail

/// Stable rendering: insertion-ordered keys, floats with 17 significant digits.
inline std::string dump_json(const Json& j) {
    std::string out;
    detail::dump_json(j, out, 0);
    return out + "\n";
}

/// {meu, decisions: [{node, parents, table: [{state, option}]}]}
inline Json policy_json(const DeployedDid& did, const Policy& policy) {
    Json decisions = Json::array();
    for (const auto& rule : policy.rules) {
        Json parents = Json::array();
        for (NodeId p : rule.observed) parents.push_back(did.nodes[p].name());
        Json table = Json::array();
        std::vector<std::size_t> state(rule.observed.size(), 0);
        for (std::size_t r = 0; r < rule.choice.size(); ++r) {
            Json labels = Json::array();
            for (std::size_t k = 0; k < state.size(); ++k) labels.push_back(did.nodes[rule.observed[k]].states[state[k]]);
            Json row;
            row["state"] = std::move(labels);
            row["option"] = did.nodes[rule.node].states[rule.choice[r]];
            table.push_back(std::move(row));
            for (std::size_t k = state.size(); k-- > 0;) {
                if (++state[k] < did.nodes[rule.observed[k]].cardinality()) break;
                state[k] = 0;
            }
        }
        Json d;
        d["node"] = did.nodes[rule.node].name();
        d["parents"] = std::move(parents);
        d["table"] = std::move(table);
        decisions.push_back(std::move(d));
    }
    Json j;
    j["meu"] = policy.meu;
    j["decisions"] = std::move(decisions);
    return j;
}

/// {t0, curve: [{t, Q, uc, evc}], t_star, model, meu}
inline Json selection_json(const EvcCurve& curve, const std::string& model_id) {
    Json points = Json::array();
    for (const auto& p : curve.points) {
        Json e;
        e["t"] = p.t;
        e["Q"] = p.q;
        e["uc"] = p.uc;
        e["evc"] = p.evc;
        points.push_back(std::move(e));
    }
    Json j;
    j["t0"] = curve.t0;
    j["curve"] = std::move(points);
    j["t_star"] = curve.t_star;
    j["model"] = model_id;
    j["meu"] = curve.best_quality;
    return j;
}

inline Json construction_json(const ConstructionResult& r) {
    Json j = selection_json(r.curve, r.model_id);
    if (r.policy && r.deployed) j["policy"] = policy_json(*r.deployed, *r.policy);
    return j;
}

}  // namespace tdid
