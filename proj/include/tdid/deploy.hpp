#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdid/error.hpp"
#include "tdid/model.hpp"
#include "tdid/text.hpp"

namespace tdid {

using NodeId = std::size_t;

enum class NodeKind { chance, decision, value, copy };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::chance: return "chance";
        case NodeKind::decision: return "decision";
        case NodeKind::value: return "value";
        case NodeKind::copy: return "copy";
    }
    return "?";
}

inline std::string qualified_name(std::string_view base, TimeIndex slice) {
    return std::string(base) + "@" + std::to_string(slice);
}

/// One variable of the deployed diagram at one slice.
struct SliceNode {
    std::string base;
    TimeIndex slice = 0;
    NodeKind kind = NodeKind::chance;
    std::vector<std::string> states;
    /// Table order for chance, copy and value nodes; observation order for decisions.
    std::vector<NodeId> parents;
    /// chance/copy: row per joint parent state (last parent fastest), column per state.
    /// value: one entry per joint parent state. decision: empty.
    std::vector<double> table;

    std::string name() const { return qualified_name(base, slice); }
    std::size_t cardinality() const { return states.size(); }

    friend bool operator==(const SliceNode&, const SliceNode&) = default;
};

/// Unrolled dynamic influence diagram. Nodes are stored in topological order
/// (every parent id is smaller than its child's id). The super value node is
/// implicit: it sums the value nodes listed in `super_value`.
struct DeployedDid {
    TimeSequence master;
    std::vector<SliceNode> nodes;
    std::vector<NodeId> super_value;
    std::vector<NodeId> decision_order;

    std::optional<NodeId> find(std::string_view qualified) const {
        for (NodeId k = 0; k < nodes.size(); ++k)
            if (nodes[k].name() == qualified) return k;
        return std::nullopt;
    }

    std::optional<NodeId> find(std::string_view base, TimeIndex slice) const {
        for (NodeId k = 0; k < nodes.size(); ++k)
            if (nodes[k].base == base && nodes[k].slice == slice) return k;
        return std::nullopt;
    }

    std::vector<std::pair<NodeId, NodeId>> arcs() const {
        std::vector<std::pair<NodeId, NodeId>> out;
        for (NodeId c = 0; c < nodes.size(); ++c)
            for (NodeId p : nodes[c].parents) out.emplace_back(p, c);
        return out;
    }

    std::vector<std::vector<NodeId>> children() const {
        std::vector<std::vector<NodeId>> out(nodes.size());
        for (NodeId c = 0; c < nodes.size(); ++c)
            for (NodeId p : nodes[c].parents) out[p].push_back(c);
        return out;
    }

    /// Total number of probability entries over chance and copy nodes.
    std::size_t cpt_entries() const {
        std::size_t n = 0;
        for (const auto& node : nodes)
            if (node.kind == NodeKind::chance || node.kind == NodeKind::copy) n += node.table.size();
        return n;
    }

    std::size_t parent_configurations(NodeId id) const {
        std::size_t n = 1;
        for (NodeId p : nodes[id].parents) n *= nodes[p].cardinality();
        return n;
    }

    friend bool operator==(const DeployedDid&, const DeployedDid&) = default;
};

/// Groups of master indices; each group starts at a member of `node_times`
/// and runs up to (excluding) the next member.
inline std::vector<std::vector<TimeIndex>> partition(const TimeSequence& master,
                                                     const TimeSequence& node_times) {
    if (!master.well_formed() || !node_times.well_formed())
        throw SequenceError("time sequences must be non-empty, positive and strictly increasing");
    if (!node_times.is_subset_of(master)) throw SequenceError("node time sequence is not a subset of master");
    if (node_times.front() != master.front())
        throw SequenceError("node time sequence must start at the master start");
    std::vector<std::vector<TimeIndex>> groups;
    for (TimeIndex i : master) {
        if (node_times.contains(i)) groups.emplace_back();
        groups.back().push_back(i);
    }
    return groups;
}

/// A parent reference resolved to a concrete slice.
struct SliceRef {
    std::string name;
    TimeIndex slice = 0;
    bool copy = false;  // slice is not indexed by the parent's own sequence

    friend bool operator==(const SliceRef&, const SliceRef&) = default;
};

/// Parents of `variable` at index i: Y_i for each instantaneous arc (Y, X),
/// Y_j with j = max{k in T_Y | k < i} for each lag arc when such k exists.
/// Instantaneous parents first, then lag parents, each in arc order.
inline std::vector<SliceRef> resolve_parents(const CondensedTdid& model, const std::string& variable,
                                             TimeIndex i) {
    std::vector<SliceRef> out;
    for (const auto& p : expected_parents(model, variable, i)) {
        const auto* v = model.find(p.name);
        TimeIndex j = p.role == ParentRole::current ? i : *v->times.latest_before(i);
        out.push_back({p.name, j, !v->times.contains(j)});
    }
    return out;
}

namespace detail {

/// Keeps the masked nodes, preserving order, and remaps every id.
inline DeployedDid restrict_nodes(const DeployedDid& did, const std::vector<bool>& keep) {
    std::vector<NodeId> remap(did.nodes.size(), static_cast<NodeId>(-1));
    DeployedDid out;
    out.master = did.master;
    for (NodeId k = 0; k < did.nodes.size(); ++k) {
        if (!keep[k]) continue;
        remap[k] = out.nodes.size();
        out.nodes.push_back(did.nodes[k]);
    }
    for (auto& n : out.nodes)
        for (auto& p : n.parents) p = remap[p];
    for (NodeId v : did.super_value)
        if (keep[v]) out.super_value.push_back(remap[v]);
    for (NodeId d : did.decision_order)
        if (keep[d]) out.decision_order.push_back(remap[d]);
    return out;
}

inline std::vector<double> identity_table(std::size_t n) {
    std::vector<double> t(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) t[k * n + k] = 1.0;
    return t;
}

/// Variables of one slice ordered so instantaneous parents come first.
/// Decisions are ordered among themselves by instantaneous ancestry, then by
/// declaration order; other ties keep declaration order.
inline std::vector<std::size_t> slice_order(const CondensedTdid& m) {
    const std::size_t n = m.variables.size();
    std::vector<std::vector<std::size_t>> succ(n);
    for (const auto& a : m.arcs)
        if (a.kind == ArcKind::instantaneous) succ[*m.index_of(a.src)].push_back(*m.index_of(a.dst));

    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::size_t> stack(succ[s].begin(), succ[s].end());
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            if (reach[s][v]) continue;
            reach[s][v] = true;
            stack.insert(stack.end(), succ[v].begin(), succ[v].end());
        }
    }
    std::vector<std::size_t> decisions;
    for (std::size_t k = 0; k < n; ++k)
        if (m.variables[k].kind == VariableKind::decision) decisions.push_back(k);
    std::vector<std::size_t> decision_order;
    std::vector<bool> placed(n, false);
    while (decision_order.size() < decisions.size()) {
        std::size_t pick = n;
        for (auto d : decisions) {
            if (placed[d]) continue;
            bool free = true;
            for (auto e : decisions) free = free && (placed[e] || e == d || !reach[e][d]);
            if (free) {
                pick = d;
                break;
            }
        }
        if (pick == n) throw ValidationError({"instantaneous arcs form a cycle"});
        placed[pick] = true;
        decision_order.push_back(pick);
    }

    std::vector<int> indeg(n, 0);
    for (std::size_t k = 1; k < decision_order.size(); ++k) succ[decision_order[k - 1]].push_back(decision_order[k]);
    for (const auto& ss : succ)
        for (auto c : ss) ++indeg[c];
    std::vector<std::size_t> order;
    std::vector<bool> done(n, false);
    while (order.size() < n) {
        std::size_t pick = n;
        for (std::size_t k = 0; k < n; ++k)
            if (!done[k] && indeg[k] == 0) {
                pick = k;
                break;
            }
        if (pick == n) throw ValidationError({"instantaneous arcs form a cycle"});
        done[pick] = true;
        order.push_back(pick);
        for (auto c : succ[pick]) --indeg[c];
    }
    return order;
}

}  // namespace detail

/// Removes childless chance, copy and decision nodes until none remain.
/// Value nodes (and the implicit super value node) are never removed. Later
/// decisions observe every earlier decision, so a decision only becomes
/// barren once no later decision is left.
inline DeployedDid eliminate_barren(const DeployedDid& did) {
    const std::size_t n = did.nodes.size();
    std::vector<std::vector<NodeId>> parents(n);
    for (NodeId k = 0; k < n; ++k) parents[k] = did.nodes[k].parents;
    for (std::size_t j = 1; j < did.decision_order.size(); ++j)
        parents[did.decision_order[j]].push_back(did.decision_order[j - 1]);
    std::vector<int> child_count(n, 0);
    for (const auto& ps : parents)
        for (NodeId p : ps) ++child_count[p];
    std::vector<bool> keep(n, true);
    std::vector<NodeId> work;
    for (NodeId k = 0; k < n; ++k)
        if (did.nodes[k].kind != NodeKind::value && child_count[k] == 0) work.push_back(k);
    while (!work.empty()) {
        NodeId k = work.back();
        work.pop_back();
        if (!keep[k]) continue;
        keep[k] = false;
        for (NodeId p : parents[k])
            if (--child_count[p] == 0 && did.nodes[p].kind != NodeKind::value) work.push_back(p);
    }
    return detail::restrict_nodes(did, keep);
}

struct DeployOptions {
    bool eliminate_barren = true;
};

/// Unrolls a condensed model over its master sequence. Nodes outside a
/// variable's own sequence become copies of the group-start node (decisions
/// repeat the most recent decision). Throws ValidationError on invalid input.
inline DeployedDid deploy(const CondensedTdid& model, DeployOptions options = {}) {
    if (auto v = validate(model); !v.empty()) throw ValidationError(std::move(v));

    DeployedDid did;
    did.master = model.master;
    const auto order = detail::slice_order(model);
    std::map<std::pair<std::size_t, TimeIndex>, NodeId> ids;

    for (TimeIndex s : model.master) {
        for (std::size_t vi : order) {
            const auto& var = model.variables[vi];
            if (var.kind == VariableKind::value && !var.times.contains(s)) continue;
            SliceNode node;
            node.base = var.name;
            node.slice = s;
            node.states = var.states;
            ids[{vi, s}] = did.nodes.size();
            if (var.kind == VariableKind::value) {
                node.kind = NodeKind::value;
            } else if (!var.times.contains(s)) {
                node.kind = NodeKind::copy;
                node.parents.push_back(ids.at({vi, *var.times.latest_at_or_before(s)}));
                node.table = detail::identity_table(var.states.size());
            } else if (var.kind == VariableKind::decision) {
                node.kind = NodeKind::decision;
                for (const auto& ref : resolve_parents(model, var.name, s))
                    node.parents.push_back(ids.at({*model.index_of(ref.name), ref.slice}));
            } else {
                node.kind = NodeKind::chance;
            }

            auto slice_node = [&](const ParentRef& p) {
                const auto pi = *model.index_of(p.name);
                TimeIndex j = p.role == ParentRole::current
                                  ? s
                                  : *model.variables[pi].times.latest_before(s);
                return ids.at({pi, j});
            };
            if (node.kind == NodeKind::chance) {
                const auto* cpd = model.cpd_for(var.name, s);
                for (const auto& p : cpd->parents) node.parents.push_back(slice_node(p));
                for (const auto& row : cpd->rows) node.table.insert(node.table.end(), row.begin(), row.end());
            } else if (node.kind == NodeKind::value) {
                const auto* util = model.utility_for(var.name, s);
                for (const auto& p : util->parents) node.parents.push_back(slice_node(p));
                node.table = util->values;
            }
            if (node.kind == NodeKind::value) did.super_value.push_back(did.nodes.size());
            if (node.kind == NodeKind::decision) did.decision_order.push_back(did.nodes.size());
            did.nodes.push_back(std::move(node));
        }
    }
    return options.eliminate_barren ? eliminate_barren(did) : did;
}

/// Replaces every copy node by its source. Children that saw both a copy and
/// its source get the diagonal of their table. Preserves MEU.
inline DeployedDid collapse_copies(const DeployedDid& did) {
    const std::size_t n = did.nodes.size();
    std::vector<NodeId> source(n);
    for (NodeId k = 0; k < n; ++k) {
        source[k] = k;
        if (did.nodes[k].kind == NodeKind::copy) source[k] = source[did.nodes[k].parents.front()];
    }
    DeployedDid out = did;
    std::vector<bool> keep(n, true);
    for (NodeId k = 0; k < n; ++k) {
        auto& node = out.nodes[k];
        if (node.kind == NodeKind::copy) {
            keep[k] = false;
            continue;
        }
        std::vector<NodeId> merged;
        for (NodeId p : node.parents) {
            NodeId s = source[p];
            if (std::find(merged.begin(), merged.end(), s) == merged.end()) merged.push_back(s);
        }
        if (merged == node.parents) continue;
        if (node.kind != NodeKind::decision) {
            // Position of each old parent's source within the merged list.
            std::vector<std::size_t> pos;
            for (NodeId p : node.parents)
                pos.push_back(std::find(merged.begin(), merged.end(), source[p]) - merged.begin());
            std::vector<std::size_t> card;
            for (NodeId p : merged) card.push_back(did.nodes[p].cardinality());
            const std::size_t width = node.kind == NodeKind::value ? 1 : node.cardinality();
            std::size_t rows = 1;
            for (auto c : card) rows *= c;
            std::vector<double> table(rows * width);
            std::vector<std::size_t> state(merged.size(), 0);
            for (std::size_t r = 0; r < rows; ++r) {
                std::size_t old_row = 0;
                for (std::size_t j = 0; j < node.parents.size(); ++j)
                    old_row = old_row * did.nodes[node.parents[j]].cardinality() + state[pos[j]];
                for (std::size_t c = 0; c < width; ++c) table[r * width + c] = node.table[old_row * width + c];
                for (std::size_t j = merged.size(); j-- > 0;) {
                    if (++state[j] < card[j]) break;
                    state[j] = 0;
                }
            }
            node.table = std::move(table);
        }
        node.parents = std::move(merged);
    }
    return detail::restrict_nodes(out, keep);
}

/// Structural and numerical invariants of a deployed diagram.
inline std::vector<std::string> validate_deployed(const DeployedDid& did) {
    std::vector<std::string> out;
    const std::size_t n = did.nodes.size();
    std::vector<int> child_count(n, 0);
    for (NodeId k = 0; k < n; ++k) {
        const auto& node = did.nodes[k];
        const std::string label = node.name();
        bool parents_ok = true;
        for (NodeId p : node.parents) {
            if (p >= k) {
                out.push_back(label + ": parent id " + std::to_string(p) + " breaks topological order");
                parents_ok = false;
            } else if (did.nodes[p].kind == NodeKind::value) {
                out.push_back(label + ": value node " + did.nodes[p].name() + " cannot be a parent");
                parents_ok = false;
            } else {
                ++child_count[p];
            }
        }
        if (!parents_ok) continue;
        std::size_t rows = did.parent_configurations(k);
        switch (node.kind) {
            case NodeKind::value:
                if (!node.states.empty()) out.push_back(label + ": value node has states");
                if (node.table.size() != rows) out.push_back(label + ": utility table size mismatch");
                break;
            case NodeKind::decision:
                if (node.states.size() < 2) out.push_back(label + ": decision needs at least 2 options");
                if (!node.table.empty()) out.push_back(label + ": decision nodes carry no table");
                break;
            case NodeKind::copy:
                if (node.parents.size() != 1) {
                    out.push_back(label + ": copy node must have exactly one parent");
                    break;
                }
                if (did.nodes[node.parents[0]].base != node.base ||
                    did.nodes[node.parents[0]].cardinality() != node.cardinality())
                    out.push_back(label + ": copy node must copy an earlier slice of " + node.base);
                if (node.table != detail::identity_table(node.cardinality()))
                    out.push_back(label + ": copy node must carry an identity table");
                break;
            case NodeKind::chance: {
                if (node.states.size() < 2) out.push_back(label + ": chance node needs at least 2 states");
                if (node.table.size() != rows * node.cardinality()) {
                    out.push_back(label + ": probability table size mismatch");
                    break;
                }
                for (std::size_t r = 0; r < rows; ++r) {
                    double sum = 0.0;
                    for (std::size_t c = 0; c < node.cardinality(); ++c) {
                        double p = node.table[r * node.cardinality() + c];
                        if (!(p >= 0.0 && p <= 1.0)) out.push_back(label + ": probability outside [0,1]");
                        sum += p;
                    }
                    if (std::abs(sum - 1.0) > probability_tolerance)
                        out.push_back(label + ": row " + std::to_string(r + 1) + " does not sum to 1");
                }
                break;
            }
        }
    }
    std::vector<NodeId> values, decisions;
    for (NodeId k = 0; k < n; ++k) {
        if (did.nodes[k].kind == NodeKind::value) values.push_back(k);
        if (did.nodes[k].kind == NodeKind::decision) decisions.push_back(k);
    }
    auto sorted = [](std::vector<NodeId> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    if (values.empty()) out.push_back("deployed diagram has no value node");
    if (sorted(did.super_value) != values) out.push_back("super value node must sum exactly the value nodes");
    if (sorted(did.decision_order) != decisions) out.push_back("decision order must list every decision once");
    for (std::size_t k = 1; k < did.decision_order.size(); ++k)
        if (did.nodes[did.decision_order[k - 1]].slice > did.nodes[did.decision_order[k]].slice)
            out.push_back("decision order is not consistent with slice order");
    return out;
}

/// Serialized deployed form: slice-qualified names, `copy ... ; of <src>`,
/// one `arc` line per parent, an `order` line for decisions and a `super` line.
inline std::string serialize_deployed(const DeployedDid& did) {
    std::string out = "tdid-deployed 1\nmaster";
    for (TimeIndex i : did.master) out += " " + std::to_string(i);
    out += "\n\n";
    for (const auto& node : did.nodes) {
        out += std::string(to_string(node.kind)) + " " + node.name();
        if (node.kind != NodeKind::value) {
            out += " :";
            for (const auto& s : node.states) out += " " + s;
        }
        if (node.kind == NodeKind::copy) out += " ; of " + did.nodes[node.parents[0]].name();
        out += "\n";
    }
    out += "\n";
    for (const auto& node : did.nodes)
        for (NodeId p : node.parents) out += "arc " + did.nodes[p].name() + " " + node.name() + "\n";
    out += "\n";
    for (const auto& node : did.nodes) {
        if (node.kind != NodeKind::chance && node.kind != NodeKind::value) continue;
        out += std::string(node.kind == NodeKind::chance ? "cpt " : "util ") + node.name();
        if (!node.parents.empty()) {
            out += " |";
            for (NodeId p : node.parents) out += " " + did.nodes[p].name();
        }
        out += " :";
        const std::size_t width = node.kind == NodeKind::chance ? node.cardinality() : node.table.size() + 1;
        for (std::size_t k = 0; k < node.table.size(); ++k) {
            if (k && k % width == 0) out += ",";
            out += " " + text::format_real(node.table[k]);
        }
        out += "\n";
    }
    out += "\norder";
    for (NodeId d : did.decision_order) out += " " + did.nodes[d].name();
    out += "\nsuper";
    for (NodeId v : did.super_value) out += " " + did.nodes[v].name();
    out += "\n";
    return out;
}

/// Inverse of serialize_deployed. Throws ParseError on malformed text and
/// ValidationError when the result breaks deployed-form invariants.
inline DeployedDid parse_deployed(std::string_view input) {
    auto lines = text::tokenize(input);
    if (lines.empty() || lines[0].tokens.size() != 2 || lines[0].tokens[0] != "tdid-deployed" ||
        lines[0].tokens[1] != "1")
        throw ParseError(lines.empty() ? 1 : lines[0].number, "expected header 'tdid-deployed 1'");

    DeployedDid did;
    std::map<std::string, NodeId> ids;
    std::vector<std::optional<NodeId>> copy_of;
    std::vector<bool> has_table;
    bool have_order = false, have_super = false;

    auto node_id = [&](const std::string& name, int line) {
        auto it = ids.find(name);
        if (it == ids.end()) throw ParseError(line, "undeclared node '" + name + "'");
        return it->second;
    };
    auto split_name = [](const std::string& q, int line) {
        auto at = q.rfind('@');
        if (at == std::string::npos || at == 0 || !text::is_name(q.substr(0, at)))
            throw ParseError(line, "expected a slice-qualified name like X@2, got '" + q + "'");
        return std::make_pair(q.substr(0, at), static_cast<TimeIndex>(text::parse_int(q.substr(at + 1), line)));
    };

    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto& t = lines[li].tokens;
        const int n = lines[li].number;
        const std::string& kw = t[0];
        if (kw == "master") {
            std::vector<TimeIndex> idx;
            for (std::size_t k = 1; k < t.size(); ++k) idx.push_back(static_cast<TimeIndex>(text::parse_int(t[k], n)));
            did.master = TimeSequence(std::move(idx));
        } else if (kw == "chance" || kw == "decision" || kw == "value" || kw == "copy") {
            if (t.size() < 2) throw ParseError(n, "expected a node name");
            SliceNode node;
            std::tie(node.base, node.slice) = split_name(t[1], n);
            node.kind = kw == "chance" ? NodeKind::chance
                        : kw == "decision" ? NodeKind::decision
                        : kw == "value" ? NodeKind::value
                                        : NodeKind::copy;
            std::size_t k = 2;
            if (node.kind != NodeKind::value) {
                if (k >= t.size() || t[k] != ":") throw ParseError(n, "expected ':' and states");
                for (++k; k < t.size() && t[k] != ";"; ++k) node.states.push_back(t[k]);
            }
            std::optional<NodeId> of;
            if (node.kind == NodeKind::copy) {
                if (k + 3 != t.size() || t[k] != ";" || t[k + 1] != "of")
                    throw ParseError(n, "expected '; of <node>'");
                of = node_id(t[k + 2], n);
                node.table = detail::identity_table(node.states.size());
            } else if (k != t.size()) {
                throw ParseError(n, "unexpected tokens after node declaration");
            }
            if (ids.count(node.name())) throw ParseError(n, "duplicate declaration of '" + node.name() + "'");
            ids[node.name()] = did.nodes.size();
            copy_of.push_back(of);
            has_table.push_back(false);
            did.nodes.push_back(std::move(node));
        } else if (kw == "arc") {
            if (t.size() != 3) throw ParseError(n, "expected 'arc <parent> <child>'");
            NodeId p = node_id(t[1], n), c = node_id(t[2], n);
            auto& ps = did.nodes[c].parents;
            if (std::find(ps.begin(), ps.end(), p) != ps.end()) throw ParseError(n, "duplicate arc");
            ps.push_back(p);
        } else if (kw == "cpt" || kw == "util") {
            if (t.size() < 3) throw ParseError(n, "malformed table");
            NodeId id = node_id(t[1], n);
            auto& node = did.nodes[id];
            if ((kw == "cpt") != (node.kind == NodeKind::chance) || (kw == "util") != (node.kind == NodeKind::value))
                throw ParseError(n, kw + " does not match the kind of " + t[1]);
            if (has_table[id]) throw ParseError(n, "duplicate table for " + t[1]);
            has_table[id] = true;
            std::size_t k = 2;
            std::vector<NodeId> order;
            if (t[k] == "|")
                for (++k; k < t.size() && t[k] != ":"; ++k) order.push_back(node_id(t[k], n));
            if (k >= t.size() || t[k] != ":") throw ParseError(n, "expected ':' before entries");
            auto sorted_order = order, sorted_arcs = node.parents;
            std::sort(sorted_order.begin(), sorted_order.end());
            std::sort(sorted_arcs.begin(), sorted_arcs.end());
            if (sorted_order != sorted_arcs) throw ParseError(n, "table parents of " + t[1] + " do not match its arcs");
            node.parents = order;
            for (++k; k < t.size(); ++k)
                if (t[k] != ",") node.table.push_back(text::parse_real(t[k], n));
        } else if (kw == "order") {
            if (have_order) throw ParseError(n, "duplicate order line");
            have_order = true;
            for (std::size_t k = 1; k < t.size(); ++k) did.decision_order.push_back(node_id(t[k], n));
        } else if (kw == "super") {
            if (have_super) throw ParseError(n, "duplicate super line");
            have_super = true;
            for (std::size_t k = 1; k < t.size(); ++k) did.super_value.push_back(node_id(t[k], n));
        } else {
            throw ParseError(n, "unknown directive '" + kw + "'");
        }
    }
    for (NodeId k = 0; k < did.nodes.size(); ++k) {
        if (copy_of[k] && did.nodes[k].parents.empty()) did.nodes[k].parents.push_back(*copy_of[k]);
        if (copy_of[k] && did.nodes[k].parents != std::vector<NodeId>{*copy_of[k]})
            throw ValidationError({did.nodes[k].name() + ": copy node arcs disagree with its 'of' clause"});
    }
    if (auto v = validate_deployed(did); !v.empty()) throw ValidationError(std::move(v));
    return did;
}

/// Graphviz description: slices as clusters, copies dashed, decisions boxed,
/// value nodes as diamonds feeding the super value node.
inline std::string to_dot(const DeployedDid& did) {
    std::string out = "digraph tdid {\n  rankdir=LR;\n";
    for (TimeIndex s : did.master) {
        out += "  subgraph cluster_" + std::to_string(s) + " {\n    label=\"slice " + std::to_string(s) + "\";\n";
        for (const auto& node : did.nodes) {
            if (node.slice != s) continue;
            out += "    \"" + node.name() + "\" [";
            switch (node.kind) {
                case NodeKind::chance: out += "shape=ellipse"; break;
                case NodeKind::copy: out += "shape=ellipse, style=dashed"; break;
                case NodeKind::decision: out += "shape=box"; break;
                case NodeKind::value: out += "shape=diamond"; break;
            }
            out += "];\n";
        }
        out += "  }\n";
    }
    out += "  \"super\" [shape=diamond, peripheries=2];\n";
    for (auto [p, c] : did.arcs()) {
        out += "  \"" + did.nodes[p].name() + "\" -> \"" + did.nodes[c].name() + "\"";
        if (did.nodes[c].kind == NodeKind::copy) out += " [style=dashed]";
        out += ";\n";
    }
    for (NodeId v : did.super_value) out += "  \"" + did.nodes[v].name() + "\" -> \"super\";\n";
    out += "}\n";
    return out;
}

}  // namespace tdid
