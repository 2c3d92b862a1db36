#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tdid {

using TimeIndex = int;

/// Strictly increasing list of positive time indices.
class TimeSequence {
public:
    TimeSequence() = default;
    TimeSequence(std::initializer_list<TimeIndex> indices) : indices_(indices) {}
    explicit TimeSequence(std::vector<TimeIndex> indices) : indices_(std::move(indices)) {}

    const std::vector<TimeIndex>& indices() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }
    TimeIndex front() const { return indices_.front(); }
    TimeIndex back() const { return indices_.back(); }
    auto begin() const noexcept { return indices_.begin(); }
    auto end() const noexcept { return indices_.end(); }

    bool contains(TimeIndex i) const {
        return std::binary_search(indices_.begin(), indices_.end(), i);
    }

    bool well_formed() const {
        if (indices_.empty() || indices_.front() < 1) return false;
        return std::adjacent_find(indices_.begin(), indices_.end(),
                                  [](TimeIndex a, TimeIndex b) { return a >= b; }) == indices_.end();
    }

    bool is_subset_of(const TimeSequence& other) const {
        return std::includes(other.indices_.begin(), other.indices_.end(),
                             indices_.begin(), indices_.end());
    }

    /// max{k in this | k < i}
    std::optional<TimeIndex> latest_before(TimeIndex i) const {
        auto it = std::lower_bound(indices_.begin(), indices_.end(), i);
        if (it == indices_.begin()) return std::nullopt;
        return *std::prev(it);
    }

    /// max{k in this | k <= i}
    std::optional<TimeIndex> latest_at_or_before(TimeIndex i) const {
        auto it = std::upper_bound(indices_.begin(), indices_.end(), i);
        if (it == indices_.begin()) return std::nullopt;
        return *std::prev(it);
    }

    friend bool operator==(const TimeSequence&, const TimeSequence&) = default;

private:
    std::vector<TimeIndex> indices_;
};

enum class VariableKind { chance, decision, value };
enum class ArcKind { instantaneous, time_lag };

/// Which slice of a parent a CPD row is conditioned on.
enum class ParentRole { current, previous };

inline const char* to_string(VariableKind k) {
    switch (k) {
        case VariableKind::chance: return "chance";
        case VariableKind::decision: return "decision";
        case VariableKind::value: return "value";
    }
    return "?";
}

inline const char* to_string(ArcKind k) {
    return k == ArcKind::instantaneous ? "inst" : "lag";
}

struct TemporalVariable {
    std::string name;
    VariableKind kind = VariableKind::chance;
    std::vector<std::string> states;  // empty for value variables
    TimeSequence times;

    friend bool operator==(const TemporalVariable&, const TemporalVariable&) = default;
};

struct Arc {
    std::string src;
    std::string dst;
    ArcKind kind = ArcKind::instantaneous;

    friend bool operator==(const Arc&, const Arc&) = default;
    friend auto operator<=>(const Arc& a, const Arc& b) {
        return std::tie(a.kind, a.src, a.dst) <=> std::tie(b.kind, b.src, b.dst);
    }
};

struct ParentRef {
    std::string name;
    ParentRole role = ParentRole::current;

    friend bool operator==(const ParentRef&, const ParentRef&) = default;
    friend auto operator<=>(const ParentRef& a, const ParentRef& b) {
        return std::tie(a.name, a.role) <=> std::tie(b.name, b.role);
    }
};

/// nullopt means the table is stationary (`@ *`) and applies to every index
/// lacking a specific table.
using TableTime = std::optional<TimeIndex>;

struct TabularCpd {
    std::string variable;
    TableTime time;
    std::vector<ParentRef> parents;
    std::vector<std::vector<double>> rows;  // last parent varies fastest

    friend bool operator==(const TabularCpd&, const TabularCpd&) = default;
};

struct UtilityTable {
    std::string variable;
    TableTime time;
    std::vector<ParentRef> parents;
    std::vector<double> values;

    friend bool operator==(const UtilityTable&, const UtilityTable&) = default;
};

struct TickDuration {
    double amount = 1.0;
    std::string unit;

    friend bool operator==(const TickDuration&, const TickDuration&) = default;
};

inline constexpr double probability_tolerance = 1e-9;

/// Condensed time-critical dynamic influence diagram. Immutable by convention
/// once built; every transformation returns a new value.
struct CondensedTdid {
    TimeSequence master;
    std::vector<TemporalVariable> variables;
    std::vector<Arc> arcs;
    std::vector<TabularCpd> cpds;
    std::vector<UtilityTable> utilities;
    std::optional<TickDuration> tick;

    const TemporalVariable* find(const std::string& name) const {
        auto it = std::find_if(variables.begin(), variables.end(),
                               [&](const TemporalVariable& v) { return v.name == name; });
        return it == variables.end() ? nullptr : &*it;
    }

    std::optional<std::size_t> index_of(const std::string& name) const {
        for (std::size_t k = 0; k < variables.size(); ++k)
            if (variables[k].name == name) return k;
        return std::nullopt;
    }

    /// The table in effect at index i: a specific one if present, else the stationary one.
    const TabularCpd* cpd_for(const std::string& name, TimeIndex i) const {
        return table_for(cpds, name, i);
    }

    const UtilityTable* utility_for(const std::string& name, TimeIndex i) const {
        return table_for(utilities, name, i);
    }

    friend bool operator==(const CondensedTdid&, const CondensedTdid&) = default;

private:
    template <class Table>
    static const Table* table_for(const std::vector<Table>& tables, const std::string& name,
                                  TimeIndex i) {
        const Table* stationary = nullptr;
        for (const auto& t : tables) {
            if (t.variable != name) continue;
            if (t.time == i) return &t;
            if (!t.time) stationary = &t;
        }
        return stationary;
    }
};

/// Condensed-level parent set of `variable` at index i, as (name, role) pairs:
/// instantaneous parents first, then lag parents that have an earlier indexed
/// slice, each group in arc order.
inline std::vector<ParentRef> expected_parents(const CondensedTdid& model,
                                               const std::string& variable, TimeIndex i) {
    std::vector<ParentRef> out;
    for (const auto& a : model.arcs)
        if (a.dst == variable && a.kind == ArcKind::instantaneous)
            out.push_back({a.src, ParentRole::current});
    for (const auto& a : model.arcs) {
        if (a.dst != variable || a.kind != ArcKind::time_lag) continue;
        const auto* src = model.find(a.src);
        if (src && src->times.latest_before(i)) out.push_back({a.src, ParentRole::previous});
    }
    return out;
}

inline std::string parent_label(const ParentRef& p) {
    return p.role == ParentRole::previous ? p.name + "@prev" : p.name;
}

/// Sort arcs by (kind, src, dst) and tables by (declaration order, time with
/// stationary first). Two structurally identical models canonicalize equal.
inline CondensedTdid canonicalize(CondensedTdid model) {
    std::sort(model.arcs.begin(), model.arcs.end());
    std::map<std::string, std::size_t> rank;
    for (std::size_t k = 0; k < model.variables.size(); ++k) rank[model.variables[k].name] = k;
    auto key = [&](const auto& t) {
        auto it = rank.find(t.variable);
        std::size_t r = it == rank.end() ? model.variables.size() : it->second;
        return std::make_tuple(r, t.variable, t.time.has_value(), t.time.value_or(0));
    };
    std::stable_sort(model.cpds.begin(), model.cpds.end(),
                     [&](const auto& a, const auto& b) { return key(a) < key(b); });
    std::stable_sort(model.utilities.begin(), model.utilities.end(),
                     [&](const auto& a, const auto& b) { return key(a) < key(b); });
    return model;
}

inline bool structurally_equal(const CondensedTdid& a, const CondensedTdid& b) {
    return canonicalize(a) == canonicalize(b);
}

namespace detail {

inline std::string seq_str(const TimeSequence& s) {
    std::string out = "<";
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (k) out += ",";
        out += std::to_string(s.indices()[k]);
    }
    return out + ">";
}

inline std::string time_str(const TableTime& t) {
    return t ? std::to_string(*t) : std::string("*");
}

inline std::size_t joint_size(const CondensedTdid& m, const std::vector<ParentRef>& parents) {
    std::size_t n = 1;
    for (const auto& p : parents) {
        const auto* v = m.find(p.name);
        n *= v ? std::max<std::size_t>(v->states.size(), 1) : 1;
    }
    return n;
}

inline bool same_parent_set(std::vector<ParentRef> a, std::vector<ParentRef> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

inline std::string parents_str(const std::vector<ParentRef>& ps) {
    std::string out = "{";
    for (std::size_t k = 0; k < ps.size(); ++k) {
        if (k) out += ", ";
        out += parent_label(ps[k]);
    }
    return out + "}";
}

}  // namespace detail

/// Every violated invariant, one message per offending element. Empty means
/// the model can be deployed.
inline std::vector<std::string> validate(const CondensedTdid& m) {
    using detail::seq_str;
    using detail::time_str;
    std::vector<std::string> out;

    if (!m.master.well_formed())
        out.push_back("master time sequence " + seq_str(m.master) +
                      " must be non-empty, positive and strictly increasing");

    std::set<std::string> names;
    bool has_value = false;
    for (const auto& v : m.variables) {
        if (!names.insert(v.name).second) out.push_back("duplicate variable '" + v.name + "'");
        if (v.kind == VariableKind::value) {
            has_value = true;
            if (!v.states.empty()) out.push_back("value variable '" + v.name + "' must not declare states");
        } else if (v.states.size() < 2) {
            out.push_back(std::string(to_string(v.kind)) + " variable '" + v.name +
                          "' needs at least 2 states");
        }
        std::set<std::string> labels(v.states.begin(), v.states.end());
        if (labels.size() != v.states.size())
            out.push_back("variable '" + v.name + "' has duplicate state labels");
        if (!v.times.well_formed()) {
            out.push_back("time sequence of '" + v.name + "' " + seq_str(v.times) +
                          " must be non-empty, positive and strictly increasing");
        } else if (m.master.well_formed()) {
            if (!v.times.is_subset_of(m.master))
                out.push_back("time sequence of '" + v.name + "' " + seq_str(v.times) +
                              " is not a subset of master " + seq_str(m.master));
            if (v.times.front() != m.master.front())
                out.push_back("time sequence of '" + v.name + "' must start at master start " +
                              std::to_string(m.master.front()));
        }
    }
    if (!has_value) out.push_back("model has no value variable");

    std::set<std::tuple<ArcKind, std::string, std::string>> seen;
    for (const auto& a : m.arcs) {
        const auto* s = m.find(a.src);
        const auto* d = m.find(a.dst);
        std::string label = std::string("arc ") + to_string(a.kind) + " " + a.src + " " + a.dst;
        if (!s) out.push_back(label + ": unknown source '" + a.src + "'");
        if (!d) out.push_back(label + ": unknown target '" + a.dst + "'");
        if (s && s->kind == VariableKind::value)
            out.push_back(label + ": value variables have no outgoing arcs");
        if (!seen.insert({a.kind, a.src, a.dst}).second) out.push_back(label + ": duplicate arc");
    }

    // Instantaneous subgraph must be acyclic (Kahn).
    {
        std::map<std::string, int> indeg;
        std::map<std::string, std::vector<std::string>> succ;
        for (const auto& v : m.variables) indeg[v.name];
        for (const auto& a : m.arcs) {
            if (a.kind != ArcKind::instantaneous || !m.find(a.src) || !m.find(a.dst)) continue;
            succ[a.src].push_back(a.dst);
            ++indeg[a.dst];
        }
        std::vector<std::string> ready;
        for (const auto& [n, d] : indeg)
            if (d == 0) ready.push_back(n);
        std::size_t visited = 0;
        while (!ready.empty()) {
            auto n = ready.back();
            ready.pop_back();
            ++visited;
            for (const auto& c : succ[n])
                if (--indeg[c] == 0) ready.push_back(c);
        }
        if (visited != indeg.size()) {
            // Peel nodes that only hang off a cycle.
            std::set<std::string> left;
            for (const auto& [n, d] : indeg)
                if (d > 0) left.insert(n);
            for (bool peeled = true; peeled;) {
                peeled = false;
                for (auto it = left.begin(); it != left.end();) {
                    bool out_arc = false;
                    for (const auto& c : succ[*it]) out_arc = out_arc || left.count(c);
                    if (out_arc) {
                        ++it;
                    } else {
                        it = left.erase(it);
                        peeled = true;
                    }
                }
            }
            std::string cyc;
            for (const auto& n : left) cyc += (cyc.empty() ? "" : ", ") + n;
            out.push_back("instantaneous arcs form a cycle through {" + cyc + "}");
        }
    }

    auto check_parent_refs = [&](const std::string& label, const std::vector<ParentRef>& ps) {
        bool ok = true;
        for (const auto& p : ps) {
            const auto* v = m.find(p.name);
            if (!v) {
                out.push_back(label + ": unknown parent '" + p.name + "'");
                ok = false;
            } else if (v->kind == VariableKind::value) {
                out.push_back(label + ": value variable '" + p.name + "' cannot be a parent");
                ok = false;
            }
        }
        return ok;
    };

    std::set<std::pair<std::string, TableTime>> cpd_keys;
    for (const auto& c : m.cpds) {
        std::string label = "cpt " + c.variable + " @ " + time_str(c.time);
        const auto* v = m.find(c.variable);
        if (!v) {
            out.push_back(label + ": unknown variable");
            continue;
        }
        if (v->kind != VariableKind::chance) {
            out.push_back(label + ": only chance variables take a CPD");
            continue;
        }
        if (!cpd_keys.insert({c.variable, c.time}).second) out.push_back(label + ": duplicate table");
        if (c.time && !v->times.contains(*c.time)) out.push_back(label + ": CPD at unindexed time");
        if (!check_parent_refs(label, c.parents)) continue;
        std::size_t want_rows = detail::joint_size(m, c.parents);
        if (c.rows.size() != want_rows)
            out.push_back(label + ": expected " + std::to_string(want_rows) + " rows, got " +
                          std::to_string(c.rows.size()));
        for (std::size_t r = 0; r < c.rows.size(); ++r) {
            const auto& row = c.rows[r];
            if (row.size() != v->states.size()) {
                out.push_back(label + ": row " + std::to_string(r + 1) + " has " +
                              std::to_string(row.size()) + " entries, expected " +
                              std::to_string(v->states.size()));
                continue;
            }
            double sum = 0.0;
            bool range_ok = true;
            for (double p : row) {
                if (!std::isfinite(p) || p < 0.0 || p > 1.0) range_ok = false;
                sum += p;
            }
            if (!range_ok) out.push_back(label + ": row " + std::to_string(r + 1) + " has entries outside [0,1]");
            if (std::abs(sum - 1.0) > probability_tolerance)
            {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.12g", sum);
                out.push_back(label + ": row " + std::to_string(r + 1) + " sums to " + buf + ", not 1");
            }
        }
    }

    std::set<std::pair<std::string, TableTime>> util_keys;
    for (const auto& u : m.utilities) {
        std::string label = "util " + u.variable + " @ " + time_str(u.time);
        const auto* v = m.find(u.variable);
        if (!v) {
            out.push_back(label + ": unknown variable");
            continue;
        }
        if (v->kind != VariableKind::value) {
            out.push_back(label + ": only value variables take a utility table");
            continue;
        }
        if (!util_keys.insert({u.variable, u.time}).second) out.push_back(label + ": duplicate table");
        if (u.time && !v->times.contains(*u.time)) out.push_back(label + ": utility at unindexed time");
        if (!check_parent_refs(label, u.parents)) continue;
        std::size_t want = detail::joint_size(m, u.parents);
        if (u.values.size() != want)
            out.push_back(label + ": expected " + std::to_string(want) + " values, got " +
                          std::to_string(u.values.size()));
        for (double x : u.values)
            if (!std::isfinite(x)) {
                out.push_back(label + ": non-finite utility");
                break;
            }
    }

    // Coverage and parent-set agreement at every indexed time.
    for (const auto& v : m.variables) {
        if (v.kind == VariableKind::decision || !v.times.well_formed()) continue;
        for (TimeIndex i : v.times) {
            auto want = expected_parents(m, v.name, i);
            const std::vector<ParentRef>* have = nullptr;
            TableTime t;
            if (v.kind == VariableKind::chance) {
                const auto* c = m.cpd_for(v.name, i);
                if (!c) {
                    out.push_back("chance variable '" + v.name + "' has no CPD at index " + std::to_string(i));
                    continue;
                }
                have = &c->parents;
                t = c->time;
            } else {
                const auto* u = m.utility_for(v.name, i);
                if (!u) {
                    out.push_back("value variable '" + v.name + "' has no utility table at index " +
                                  std::to_string(i));
                    continue;
                }
                have = &u->parents;
                t = u->time;
            }
            if (!detail::same_parent_set(*have, want))
                out.push_back(std::string(v.kind == VariableKind::chance ? "cpt " : "util ") + v.name +
                              " @ " + time_str(t) + ": parents " + detail::parents_str(*have) +
                              " do not match " + detail::parents_str(want) + " required at index " +
                              std::to_string(i));
        }
    }
    return out;
}

}  // namespace tdid
