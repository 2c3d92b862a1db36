#pragma once

// Line-oriented model file format:
//
//   tdid 1
//   master 1 2 3 4
//   tick 1 minute
//   chance X : lo hi ; times 1 3
//   decision D : a b
//   value U
//   arc inst X Y
//   arc lag Y X
//   cpt X @ 1 : 0.5 0.5
//   cpt X @ * | Y@prev : 0.9 0.1 , 0.2 0.8
//   util U @ * | Y : 0 10
//
// A parent written `Y@prev` is conditioned on Y's most recent earlier indexed
// slice; a bare `Y` on the current slice.

#include <set>
#include <string>
#include <string_view>

#include "tdid/error.hpp"
#include "tdid/model.hpp"
#include "tdid/text.hpp"

namespace tdid {

namespace detail {

struct TableHead {
    std::string variable;
    TableTime time;
    std::vector<ParentRef> parents;
    std::size_t body;  // index of first token after ':'
};

inline TableHead parse_table_head(const text::Line& line, const CondensedTdid& m) {
    const auto& t = line.tokens;
    const int n = line.number;
    std::size_t k = 1;
    if (k >= t.size()) throw ParseError(n, "expected a variable name after '" + t[0] + "'");
    TableHead head;
    std::string time_tok;
    if (auto at = t[k].find('@'); at != std::string::npos) {
        head.variable = t[k].substr(0, at);
        time_tok = t[k].substr(at + 1);
        ++k;
    } else {
        head.variable = t[k++];
        if (k >= t.size() || t[k] != "@") throw ParseError(n, "expected '@ <index|*>' after " + head.variable);
        ++k;
        if (k >= t.size()) throw ParseError(n, "missing time index");
        time_tok = t[k++];
    }
    const auto* v = m.find(head.variable);
    if (!v) throw ParseError(n, "undeclared variable '" + head.variable + "'");
    if (time_tok != "*") {
        long i = text::parse_int(time_tok, n);
        if (!v->times.contains(static_cast<TimeIndex>(i)))
            throw ParseError(n, "CPD at unindexed time: " + head.variable + " is not indexed at " + time_tok);
        head.time = static_cast<TimeIndex>(i);
    }
    if (k < t.size() && t[k] == "|") {
        ++k;
        while (k < t.size() && t[k] != ":") {
            std::string tok = t[k++];
            ParentRef p{tok, ParentRole::current};
            if (auto at = tok.find('@'); at != std::string::npos) {
                if (tok.substr(at + 1) != "prev")
                    throw ParseError(n, "parent '" + tok + "': only the '@prev' qualifier is allowed");
                p = {tok.substr(0, at), ParentRole::previous};
            }
            if (!m.find(p.name)) throw ParseError(n, "undeclared variable '" + p.name + "'");
            head.parents.push_back(p);
        }
    }
    if (k >= t.size() || t[k] != ":") throw ParseError(n, "expected ':' before table entries");
    head.body = k + 1;
    return head;
}

inline std::vector<std::string> parse_states(const text::Line& line, std::size_t& k) {
    std::vector<std::string> states;
    const auto& t = line.tokens;
    while (k < t.size() && t[k] != ";") {
        if (!text::is_name(t[k])) throw ParseError(line.number, "bad state label '" + t[k] + "'");
        states.push_back(t[k++]);
    }
    return states;
}

inline TimeSequence parse_times(const text::Line& line, std::size_t k) {
    std::vector<TimeIndex> idx;
    for (; k < line.tokens.size(); ++k)
        idx.push_back(static_cast<TimeIndex>(text::parse_int(line.tokens[k], line.number)));
    if (idx.empty()) throw ParseError(line.number, "empty time sequence");
    return TimeSequence(std::move(idx));
}

}  // namespace detail

/// Parses a condensed model. Syntax, undeclared references, duplicate
/// declarations and tables at unindexed times raise ParseError; everything
/// else is left to validate().
inline CondensedTdid parse_model(std::string_view input) {
    CondensedTdid m;
    auto lines = text::tokenize(input);
    if (lines.empty() || lines[0].tokens.size() != 2 || lines[0].tokens[0] != "tdid")
        throw ParseError(lines.empty() ? 1 : lines[0].number, "expected header 'tdid 1'");
    if (lines[0].tokens[1] != "1")
        throw ParseError(lines[0].number, "unsupported format version " + lines[0].tokens[1]);

    bool have_master = false;
    std::set<std::pair<std::string, TableTime>> cpd_keys, util_keys;
    std::set<Arc> arc_keys;

    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto& line = lines[li];
        const auto& t = line.tokens;
        const int n = line.number;
        const std::string& kw = t[0];

        if (kw == "master") {
            if (have_master) throw ParseError(n, "duplicate declaration of master");
            if (!m.variables.empty()) throw ParseError(n, "master must precede variable declarations");
            m.master = detail::parse_times(line, 1);
            have_master = true;
        } else if (kw == "tick") {
            if (t.size() != 3) throw ParseError(n, "expected 'tick <amount> <unit>'");
            m.tick = TickDuration{text::parse_real(t[1], n), t[2]};
        } else if (kw == "chance" || kw == "decision" || kw == "value") {
            if (!have_master) throw ParseError(n, "master must be declared before variables");
            if (t.size() < 2 || !text::is_name(t[1])) throw ParseError(n, "expected a variable name");
            TemporalVariable v;
            v.name = t[1];
            v.kind = kw == "chance" ? VariableKind::chance
                     : kw == "decision" ? VariableKind::decision
                                        : VariableKind::value;
            if (m.find(v.name)) throw ParseError(n, "duplicate declaration of '" + v.name + "'");
            std::size_t k = 2;
            if (v.kind != VariableKind::value) {
                if (k >= t.size() || t[k] != ":") throw ParseError(n, "expected ':' and states after " + v.name);
                ++k;
                v.states = detail::parse_states(line, k);
            }
            v.times = m.master;
            if (k < t.size()) {
                if (t[k] != ";" || k + 1 >= t.size() || t[k + 1] != "times")
                    throw ParseError(n, "expected '; times <i> ...'");
                v.times = detail::parse_times(line, k + 2);
            }
            m.variables.push_back(std::move(v));
        } else if (kw == "arc") {
            if (t.size() != 4) throw ParseError(n, "expected 'arc inst|lag <src> <dst>'");
            Arc a;
            if (t[1] == "inst") a.kind = ArcKind::instantaneous;
            else if (t[1] == "lag") a.kind = ArcKind::time_lag;
            else throw ParseError(n, "unknown arc kind '" + t[1] + "'");
            a.src = t[2];
            a.dst = t[3];
            for (const auto* name : {&a.src, &a.dst})
                if (!m.find(*name)) throw ParseError(n, "undeclared variable '" + *name + "'");
            if (!arc_keys.insert(a).second) throw ParseError(n, "duplicate declaration of arc");
            m.arcs.push_back(std::move(a));
        } else if (kw == "cpt") {
            auto head = detail::parse_table_head(line, m);
            if (!cpd_keys.insert({head.variable, head.time}).second)
                throw ParseError(n, "duplicate declaration of cpt " + head.variable);
            TabularCpd c{head.variable, head.time, head.parents, {}};
            std::vector<double> row;
            for (std::size_t k = head.body; k < t.size(); ++k) {
                if (t[k] == ",") {
                    if (row.empty()) throw ParseError(n, "empty row");
                    c.rows.push_back(std::move(row));
                    row.clear();
                } else {
                    row.push_back(text::parse_real(t[k], n));
                }
            }
            if (row.empty()) throw ParseError(n, "empty row");
            c.rows.push_back(std::move(row));
            m.cpds.push_back(std::move(c));
        } else if (kw == "util") {
            auto head = detail::parse_table_head(line, m);
            if (!util_keys.insert({head.variable, head.time}).second)
                throw ParseError(n, "duplicate declaration of util " + head.variable);
            UtilityTable u{head.variable, head.time, head.parents, {}};
            for (std::size_t k = head.body; k < t.size(); ++k) {
                if (t[k] == ",") throw ParseError(n, "utility tables take a single row");
                u.values.push_back(text::parse_real(t[k], n));
            }
            m.utilities.push_back(std::move(u));
        } else {
            throw ParseError(n, "unknown directive '" + kw + "'");
        }
    }
    if (!have_master) throw ParseError(lines.back().number, "missing master declaration");
    return m;
}

/// Canonical, byte-stable text form.
inline std::string serialize_model(const CondensedTdid& input) {
    const CondensedTdid m = canonicalize(input);
    std::string out = "tdid 1\nmaster";
    for (TimeIndex i : m.master) out += " " + std::to_string(i);
    out += "\n";
    if (m.tick) out += "tick " + text::format_real(m.tick->amount) + " " + m.tick->unit + "\n";
    out += "\n";
    for (const auto& v : m.variables) {
        out += std::string(to_string(v.kind)) + " " + v.name;
        if (v.kind != VariableKind::value) {
            out += " :";
            for (const auto& s : v.states) out += " " + s;
        }
        if (!(v.times == m.master)) {
            out += " ; times";
            for (TimeIndex i : v.times) out += " " + std::to_string(i);
        }
        out += "\n";
    }
    if (!m.arcs.empty()) out += "\n";
    for (const auto& a : m.arcs) out += std::string("arc ") + to_string(a.kind) + " " + a.src + " " + a.dst + "\n";
    if (!m.cpds.empty() || !m.utilities.empty()) out += "\n";

    auto head = [](const char* kw, const std::string& var, const TableTime& t,
                   const std::vector<ParentRef>& ps) {
        std::string s = std::string(kw) + " " + var + " @ " + detail::time_str(t);
        if (!ps.empty()) {
            s += " |";
            for (const auto& p : ps) s += " " + parent_label(p);
        }
        return s + " :";
    };
    for (const auto& c : m.cpds) {
        out += head("cpt", c.variable, c.time, c.parents);
        for (std::size_t r = 0; r < c.rows.size(); ++r) {
            if (r) out += ",";
            for (double p : c.rows[r]) out += " " + text::format_real(p);
        }
        out += "\n";
    }
    for (const auto& u : m.utilities) {
        out += head("util", u.variable, u.time, u.parents);
        for (double x : u.values) out += " " + text::format_real(x);
        out += "\n";
    }
    return out;
}

inline CondensedTdid load_model(const std::string& path) {
    return parse_model(text::read_file(path));
}

}  // namespace tdid
