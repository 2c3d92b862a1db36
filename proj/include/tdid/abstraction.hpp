#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tdid/error.hpp"
#include "tdid/model.hpp"
#include "tdid/text.hpp"

namespace tdid {

/// Unknown variable, removal of every value variable, or an empty lattice.
class AbstractionError : public Error {
public:
    using Error::Error;
};

/// Drops indices from one variable's time sequence. Tables at dropped indices
/// go away; the rest keep their parents (lag parents now resolve to the most
/// recent remaining slice).
inline CondensedTdid abstract_time(const CondensedTdid& model, const std::string& variable,
                                   const TimeSequence& new_times) {
    auto vi = model.index_of(variable);
    if (!vi) throw AbstractionError("unknown variable '" + variable + "'");
    const auto& old_times = model.variables[*vi].times;
    if (!new_times.well_formed()) throw SequenceError("new time sequence for '" + variable + "' is malformed");
    if (!new_times.is_subset_of(old_times))
        throw SequenceError("invalid refinement: " + detail::seq_str(new_times) + " is not a subset of " +
                            detail::seq_str(old_times) + " for '" + variable + "'");
    if (new_times.front() != old_times.front())
        throw SequenceError("invalid refinement: '" + variable + "' must keep its first index " +
                            std::to_string(old_times.front()));

    CondensedTdid out = model;
    out.variables[*vi].times = new_times;
    auto dropped = [&](const auto& t) { return t.variable == variable && t.time && !new_times.contains(*t.time); };
    std::erase_if(out.cpds, dropped);
    std::erase_if(out.utilities, dropped);
    if (auto v = validate(out); !v.empty()) throw ValidationError(std::move(v));
    return out;
}

/// abstract_time applied to every variable in declaration order.
inline CondensedTdid abstract_time_all(const CondensedTdid& model, const TimeSequence& new_times) {
    CondensedTdid out = model;
    for (const auto& v : model.variables) out = abstract_time(out, v.name, new_times);
    return out;
}

namespace detail {

/// Variables with a directed path (over both arc kinds) to a value variable.
inline std::set<std::string> reaches_value(const CondensedTdid& m) {
    std::set<std::string> out;
    for (const auto& v : m.variables)
        if (v.kind == VariableKind::value) out.insert(v.name);
    for (bool grew = true; grew;) {
        grew = false;
        for (const auto& a : m.arcs)
            if (out.count(a.dst) && out.insert(a.src).second) grew = true;
    }
    return out;
}

}  // namespace detail

/// Removes `drop`, value variables that depend on a dropped variable, and any
/// variable that loses its last path to a value variable as a result.
/// Refuses (DependencyError) when a retained chance variable's CPD
/// conditions on a dropped variable; re-specifying it is the caller's job.
inline CondensedTdid abstract_space(const CondensedTdid& model, const std::set<std::string>& drop) {
    for (const auto& name : drop)
        if (!model.find(name)) throw AbstractionError("unknown variable '" + name + "'");
    if (drop.empty()) return model;

    std::set<std::string> removed = drop;
    for (const auto& a : model.arcs) {
        const auto* dst = model.find(a.dst);
        if (drop.count(a.src) && dst->kind == VariableKind::value) removed.insert(a.dst);
    }
    bool value_left = false;
    for (const auto& v : model.variables)
        if (v.kind == VariableKind::value && !removed.count(v.name)) value_left = true;
    if (!value_left) throw AbstractionError("abstraction would remove every value variable");

    std::vector<std::string> orphaned;
    for (const auto& c : model.cpds) {
        if (removed.count(c.variable)) continue;
        for (const auto& p : c.parents)
            if (removed.count(p.name)) {
                orphaned.push_back("cpt " + c.variable + " @ " + detail::time_str(c.time));
                break;
            }
    }
    if (!orphaned.empty()) {
        std::string msg = "dropping would orphan CPDs that must be re-specified:";
        for (const auto& o : orphaned) msg += " [" + o + "]";
        throw DependencyError(msg, orphaned);
    }

    const auto before = detail::reaches_value(model);
    CondensedTdid out = model;
    auto strip = [&](const std::set<std::string>& gone) {
        std::erase_if(out.variables, [&](const auto& v) { return gone.count(v.name) > 0; });
        std::erase_if(out.arcs, [&](const auto& a) { return gone.count(a.src) || gone.count(a.dst); });
        std::erase_if(out.cpds, [&](const auto& c) { return gone.count(c.variable) > 0; });
        std::erase_if(out.utilities, [&](const auto& u) { return gone.count(u.variable) > 0; });
    };
    strip(removed);

    const auto after = detail::reaches_value(out);
    std::set<std::string> barren;
    for (const auto& v : out.variables)
        if (before.count(v.name) && !after.count(v.name)) barren.insert(v.name);
    strip(barren);

    if (auto v = validate(out); !v.empty()) throw ValidationError(std::move(v));
    return out;
}

/// One edit of the `abstract` pipeline: a retime (`variable` may be "all")
/// or a space drop.
struct AbstractionEdit {
    enum class Kind { retime, drop } kind = Kind::retime;
    std::string variable;            // retime target
    TimeSequence times;              // retime sequence
    std::set<std::string> drop;      // dropped variables

    static AbstractionEdit retime(std::string var, TimeSequence t) {
        return {Kind::retime, std::move(var), std::move(t), {}};
    }
    static AbstractionEdit remove(std::set<std::string> vars) { return {Kind::drop, {}, {}, std::move(vars)}; }
};

inline CondensedTdid apply_edits(CondensedTdid model, const std::vector<AbstractionEdit>& edits) {
    for (const auto& e : edits) {
        if (e.kind == AbstractionEdit::Kind::drop) model = abstract_space(model, e.drop);
        else if (e.variable == "all") model = abstract_time_all(model, e.times);
        else model = abstract_time(model, e.variable, e.times);
    }
    return model;
}

/// Allowed abstraction choices.
///
///   time <var|all> : 1 2 3 | 1 3
///   space <group> : CD poa
///   space-choices : keep drop          # default for every group
///   space-choices <group> : keep       # per-group override
struct LatticeSpec {
    struct TimeDimension {
        std::string variable;
        std::vector<TimeSequence> choices;
    };
    struct SpaceGroup {
        std::string name;
        std::set<std::string> variables;
        std::vector<bool> choices;  // true = drop
    };
    std::vector<TimeDimension> time;
    std::vector<SpaceGroup> space;
};

inline LatticeSpec parse_lattice(std::string_view input) {
    LatticeSpec spec;
    std::vector<bool> default_choices{false, true};
    std::vector<std::pair<std::string, std::vector<bool>>> overrides;
    auto parse_choices = [](const text::Line& line, std::size_t k) {
        std::vector<bool> out;
        for (; k < line.tokens.size(); ++k) {
            const auto& t = line.tokens[k];
            if (t == "|" || t == ",") continue;
            if (t == "keep") out.push_back(false);
            else if (t == "drop") out.push_back(true);
            else throw ParseError(line.number, "space choice must be keep or drop, got '" + t + "'");
        }
        if (out.empty()) throw ParseError(line.number, "no space choices");
        return out;
    };
    for (const auto& line : text::tokenize(input)) {
        const auto& t = line.tokens;
        if (t[0] == "time") {
            if (t.size() < 4 || t[2] != ":") throw ParseError(line.number, "expected 'time <var> : <seq> | <seq> ...'");
            LatticeSpec::TimeDimension dim{t[1], {}};
            std::vector<TimeIndex> cur;
            for (std::size_t k = 3; k <= t.size(); ++k) {
                if (k == t.size() || t[k] == "|") {
                    if (cur.empty()) throw ParseError(line.number, "empty time sequence");
                    dim.choices.emplace_back(std::move(cur));
                    cur.clear();
                } else if (t[k] != ",") {
                    cur.push_back(static_cast<TimeIndex>(text::parse_int(t[k], line.number)));
                }
            }
            spec.time.push_back(std::move(dim));
        } else if (t[0] == "space") {
            if (t.size() < 4 || t[2] != ":") throw ParseError(line.number, "expected 'space <group> : <var> ...'");
            LatticeSpec::SpaceGroup g{t[1], {}, {}};
            for (std::size_t k = 3; k < t.size(); ++k) g.variables.insert(t[k]);
            spec.space.push_back(std::move(g));
        } else if (t[0] == "space-choices") {
            if (t.size() >= 2 && t[1] == ":") default_choices = parse_choices(line, 2);
            else if (t.size() >= 3 && t[2] == ":") overrides.emplace_back(t[1], parse_choices(line, 3));
            else throw ParseError(line.number, "expected 'space-choices [group] : keep drop'");
        } else {
            throw ParseError(line.number, "unknown directive '" + t[0] + "'");
        }
    }
    for (auto& g : spec.space) {
        g.choices = default_choices;
        for (const auto& [name, choices] : overrides)
            if (name == g.name) g.choices = choices;
    }
    for (const auto& [name, choices] : overrides)
        if (std::none_of(spec.space.begin(), spec.space.end(), [&](const auto& g) { return g.name == name; }))
            throw AbstractionError("space-choices for undeclared group '" + name + "'");
    return spec;
}

struct AbstractionVariant {
    std::vector<std::string> coordinates;  // "var=1,3" or "group=drop" per dimension
    CondensedTdid model;

    std::string label() const {
        std::string out;
        for (const auto& c : coordinates) out += (out.empty() ? "" : " ") + c;
        return out.empty() ? "original" : out;
    }
};

/// Cartesian product of the lattice choices (time dimensions first, last
/// dimension varying fastest). Combinations that fail to abstract or validate
/// are skipped.
inline std::vector<AbstractionVariant> enumerate_abstractions(const CondensedTdid& model, const LatticeSpec& spec) {
    std::vector<std::size_t> radix;
    for (const auto& d : spec.time) radix.push_back(d.choices.size());
    for (const auto& g : spec.space) radix.push_back(g.choices.size());
    for (auto r : radix)
        if (r == 0) throw AbstractionError("lattice dimension without choices");

    std::vector<AbstractionVariant> out;
    std::vector<std::size_t> digit(radix.size(), 0);
    for (;;) {
        AbstractionVariant v;
        std::vector<AbstractionEdit> edits;
        std::set<std::string> drop;
        for (std::size_t k = 0; k < spec.time.size(); ++k) {
            const auto& seq = spec.time[k].choices[digit[k]];
            std::string c = spec.time[k].variable + "=";
            for (std::size_t j = 0; j < seq.size(); ++j) c += (j ? "," : "") + std::to_string(seq.indices()[j]);
            v.coordinates.push_back(c);
            edits.push_back(AbstractionEdit::retime(spec.time[k].variable, seq));
        }
        for (std::size_t k = 0; k < spec.space.size(); ++k) {
            const bool d = spec.space[k].choices[digit[spec.time.size() + k]];
            v.coordinates.push_back(spec.space[k].name + (d ? "=drop" : "=keep"));
            if (d) drop.insert(spec.space[k].variables.begin(), spec.space[k].variables.end());
        }
        if (!drop.empty()) edits.push_back(AbstractionEdit::remove(drop));
        try {
            v.model = apply_edits(model, edits);
            out.push_back(std::move(v));
        } catch (const Error&) {
            // infeasible combination
        }
        std::size_t k = radix.size();
        while (k-- > 0) {
            if (++digit[k] < radix[k]) break;
            digit[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) break;
    }
    if (out.empty()) throw AbstractionError("no feasible abstraction in the lattice");
    return out;
}

}  // namespace tdid
