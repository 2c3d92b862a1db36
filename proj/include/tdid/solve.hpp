#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tdid/deploy.hpp"
#include "tdid/error.hpp"
#include "tdid/factor.hpp"

namespace tdid {

inline constexpr double utility_tolerance = 1e-9;

/// Decision rule for one decision node: an option index for every joint state
/// of `observed` (last observed node varies fastest).
struct DecisionRule {
    NodeId node = 0;
    std::vector<NodeId> observed;
    std::vector<std::size_t> choice;

    friend bool operator==(const DecisionRule&, const DecisionRule&) = default;
};

struct Policy {
    std::vector<DecisionRule> rules;  // in decision order
    double meu = 0.0;
};

/// What each decision observes: its informational parents followed by every
/// earlier decision (in decision order) not already among them.
/// Throws InformationStructureError when a decision would observe something
/// that depends on itself or on a later decision.
inline std::vector<std::vector<NodeId>> information_sets(const DeployedDid& did) {
    std::vector<std::vector<NodeId>> out;
    for (std::size_t k = 0; k < did.decision_order.size(); ++k) {
        const NodeId d = did.decision_order[k];
        if (did.nodes[d].kind != NodeKind::decision)
            throw InformationStructureError(did.nodes[d].name() + " in decision order is not a decision");
        std::vector<NodeId> obs = did.nodes[d].parents;
        for (std::size_t j = 0; j < k; ++j)
            if (std::find(obs.begin(), obs.end(), did.decision_order[j]) == obs.end())
                obs.push_back(did.decision_order[j]);
        out.push_back(std::move(obs));
    }
    // With the implicit arcs from earlier to later decisions added, the graph
    // must stay acyclic.
    const std::size_t n = did.nodes.size();
    std::vector<std::vector<NodeId>> parents(n);
    for (NodeId v = 0; v < n; ++v) parents[v] = did.nodes[v].parents;
    for (std::size_t k = 0; k < out.size(); ++k) parents[did.decision_order[k]] = out[k];
    std::vector<int> mark(n, 0);
    std::function<bool(NodeId)> cyclic = [&](NodeId v) {
        if (mark[v] == 1) return true;
        if (mark[v] == 2) return false;
        mark[v] = 1;
        for (NodeId p : parents[v])
            if (cyclic(p)) return true;
        mark[v] = 2;
        return false;
    };
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (cyclic(did.decision_order[k]))
            throw InformationStructureError("decision " + did.nodes[did.decision_order[k]].name() +
                                            " observes a node that depends on itself or on a later decision");
    }
    return out;
}

inline std::size_t joint_states(const DeployedDid& did, const std::vector<NodeId>& nodes) {
    std::size_t n = 1;
    for (NodeId v : nodes) n *= did.nodes[v].cardinality();
    return n;
}

/// Number of deterministic policies, saturating at UINT64_MAX.
inline std::uint64_t count_policies(const DeployedDid& did) {
    const auto info = information_sets(did);
    long double total = 1.0L;
    for (std::size_t k = 0; k < info.size(); ++k)
        total *= std::pow(static_cast<long double>(did.nodes[did.decision_order[k]].cardinality()),
                          static_cast<long double>(joint_states(did, info[k])));
    if (total >= 18446744073709551615.0L) return UINT64_MAX;
    return static_cast<std::uint64_t>(total);
}

namespace detail {

/// Factors and graph views shared by the solver's steps.
class SolveContext {
public:
    explicit SolveContext(const DeployedDid& did) : did_(did), info_(information_sets(did)) {
        const std::size_t n = did.nodes.size();
        parents_.resize(n);
        children_.resize(n);
        position_.assign(n, npos);
        for (NodeId v = 0; v < n; ++v) parents_[v] = did.nodes[v].parents;
        for (std::size_t k = 0; k < info_.size(); ++k) {
            parents_[did.decision_order[k]] = info_[k];
            position_[did.decision_order[k]] = k;
        }
        for (NodeId v = 0; v < n; ++v)
            for (NodeId p : parents_[v]) children_[p].push_back(v);
        base_.resize(n);
        for (NodeId v = 0; v < n; ++v) {
            const auto& node = did.nodes[v];
            if (node.kind == NodeKind::decision) continue;
            Factor f;
            for (NodeId p : node.parents) {
                f.scope.push_back(p);
                f.card.push_back(did.nodes[p].cardinality());
            }
            if (node.kind != NodeKind::value) {
                f.scope.push_back(v);
                f.card.push_back(node.cardinality());
            }
            f.values = node.table;
            base_[v] = std::move(f);
        }
    }

    const DeployedDid& did() const { return did_; }
    const std::vector<std::vector<NodeId>>& info() const { return info_; }
    std::size_t decision_count() const { return info_.size(); }
    NodeId decision(std::size_t k) const { return did_.decision_order[k]; }

    std::vector<NodeId> family(std::size_t k) const {
        auto f = info_[k];
        f.push_back(decision(k));
        return f;
    }

    std::vector<std::size_t> cards(const std::vector<NodeId>& nodes) const {
        std::vector<std::size_t> c;
        for (NodeId v : nodes) c.push_back(did_.nodes[v].cardinality());
        return c;
    }

    /// Decision factor over (observed..., d): deterministic when `choice` is
    /// given, uniform otherwise.
    Factor decision_factor(std::size_t k, const std::optional<std::vector<std::size_t>>& choice) const {
        Factor f{family(k), cards(family(k)), {}};
        const std::size_t m = did_.nodes[decision(k)].cardinality();
        const std::size_t rows = joint_states(did_, info_[k]);
        f.values.assign(rows * m, choice ? 0.0 : 1.0 / static_cast<double>(m));
        if (choice)
            for (std::size_t r = 0; r < rows; ++r) f.values[r * m + (*choice)[r]] = 1.0;
        return f;
    }

    /// Expected utility of value node u as a function of `keep`, with
    /// decisions modelled by `policies` (entry k for decision k; the decision
    /// `free_k`, if any, gets no factor).
    Factor utility_on(NodeId u, const std::vector<NodeId>& keep, const std::vector<Factor>& policies,
                      std::optional<std::size_t> free_k) const {
        return eliminate_on(u, keep, policies, free_k);
    }

    /// Joint distribution of `keep` under fully specified `policies`.
    Factor marginal(const std::vector<NodeId>& keep, const std::vector<Factor>& policies) const {
        return eliminate_on(std::nullopt, keep, policies, std::nullopt);
    }

    Factor eliminate_on(std::optional<NodeId> u, const std::vector<NodeId>& keep, const std::vector<Factor>& policies,
                        std::optional<std::size_t> free_k) const {
        std::vector<bool> in(did_.nodes.size(), false);
        std::vector<NodeId> stack(keep.begin(), keep.end());
        if (u) stack.push_back(*u);
        while (!stack.empty()) {
            NodeId v = stack.back();
            stack.pop_back();
            if (in[v]) continue;
            in[v] = true;
            for (NodeId p : parents_[v]) stack.push_back(p);
        }
        std::vector<Factor> fs;
        for (NodeId v = 0; v < did_.nodes.size(); ++v) {
            if (!in[v]) continue;
            const auto& node = did_.nodes[v];
            if (node.kind == NodeKind::value) {
                if (v == u) fs.push_back(base_[v]);
            } else if (node.kind == NodeKind::decision) {
                if (position_[v] != free_k) fs.push_back(policies[position_[v]]);
            } else {
                fs.push_back(base_[v]);
            }
        }
        return eliminate(std::move(fs), keep, cards(keep));
    }

    bool is_descendant(NodeId v, NodeId ancestor) const {
        std::vector<NodeId> stack{ancestor};
        std::vector<bool> seen(did_.nodes.size(), false);
        while (!stack.empty()) {
            NodeId x = stack.back();
            stack.pop_back();
            if (x == v) return true;
            if (seen[x]) continue;
            seen[x] = true;
            for (NodeId c : children_[x]) stack.push_back(c);
        }
        return false;
    }

    std::vector<NodeId> utilities_below(std::size_t k) const {
        std::vector<NodeId> out;
        for (NodeId u : did_.super_value)
            if (is_descendant(u, decision(k))) out.push_back(u);
        return out;
    }

    /// Nodes reachable from `sources` by an active trail given `observed`.
    std::vector<bool> reachable(const std::vector<NodeId>& sources, const std::vector<bool>& observed) const {
        const std::size_t n = did_.nodes.size();
        std::vector<bool> anc(n, false);  // observed nodes and their ancestors
        std::vector<NodeId> stack;
        for (NodeId v = 0; v < n; ++v)
            if (observed[v]) stack.push_back(v);
        while (!stack.empty()) {
            NodeId v = stack.back();
            stack.pop_back();
            if (anc[v]) continue;
            anc[v] = true;
            for (NodeId p : parents_[v]) stack.push_back(p);
        }
        std::vector<bool> out(n, false), up(n, false), down(n, false);
        std::vector<std::pair<NodeId, bool>> queue;  // (node, arrived from a child)
        for (NodeId s : sources) queue.emplace_back(s, true);
        while (!queue.empty()) {
            auto [v, from_child] = queue.back();
            queue.pop_back();
            auto& seen = from_child ? up : down;
            if (seen[v]) continue;
            seen[v] = true;
            if (!observed[v]) out[v] = true;
            if (from_child && !observed[v]) {
                for (NodeId p : parents_[v]) queue.emplace_back(p, true);
                for (NodeId c : children_[v]) queue.emplace_back(c, false);
            } else if (!from_child) {
                if (!observed[v])
                    for (NodeId c : children_[v]) queue.emplace_back(c, false);
                if (anc[v])
                    for (NodeId p : parents_[v]) queue.emplace_back(p, true);
            }
        }
        return out;
    }

    /// Decision k is extremal among `remaining` when the utilities below it
    /// are d-separated from the families of the other remaining decisions
    /// given its own family. Its optimal rule then does not depend on how the
    /// others are chosen.
    bool extremal(std::size_t k, const std::vector<std::size_t>& remaining) const {
        const auto below = utilities_below(k);
        if (below.empty()) return true;
        std::vector<bool> observed(did_.nodes.size(), false);
        for (NodeId v : family(k)) observed[v] = true;
        const auto reach = reachable(below, observed);
        for (std::size_t j : remaining) {
            if (j == k) continue;
            for (NodeId v : family(j))
                if (!observed[v] && reach[v]) return false;
        }
        return true;
    }

    /// Best rule for decision k given the other decision factors, scoring
    /// only the utilities below k. Ties keep the lowest option index.
    std::vector<std::size_t> best_rule(std::size_t k, const std::vector<Factor>& policies) const {
        const auto fam = family(k);
        const std::size_t m = did_.nodes[decision(k)].cardinality();
        const std::size_t rows = joint_states(did_, info_[k]);
        std::vector<double> eu(rows * m, 0.0);
        for (NodeId u : utilities_below(k)) {
            auto f = utility_on(u, fam, policies, k);
            for (std::size_t i = 0; i < eu.size(); ++i) eu[i] += f.values[i];
        }
        std::vector<std::size_t> rule(rows, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            double best = eu[r * m];
            for (std::size_t o = 1; o < m; ++o)
                if (eu[r * m + o] > best + utility_tolerance) {
                    best = eu[r * m + o];
                    rule[r] = o;
                }
        }
        return rule;
    }

    double expected_utility(const std::vector<Factor>& policies) const {
        double total = 0.0;
        for (NodeId u : did_.super_value) total += utility_on(u, {}, policies, std::nullopt).values[0];
        return total;
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    const DeployedDid& did_;
    std::vector<std::vector<NodeId>> info_;
    std::vector<std::vector<NodeId>> parents_;   // decisions: information sets
    std::vector<std::vector<NodeId>> children_;
    std::vector<std::size_t> position_;          // decision index or npos
    std::vector<Factor> base_;                   // CPD / utility factors
};

inline void check_coverage(const SolveContext& ctx, const Policy& policy) {
    const auto& did = ctx.did();
    if (policy.rules.size() != ctx.decision_count())
        throw CoverageError("policy has " + std::to_string(policy.rules.size()) + " rules for " +
                            std::to_string(ctx.decision_count()) + " decisions");
    for (std::size_t k = 0; k < ctx.decision_count(); ++k) {
        const auto& rule = policy.rules[k];
        const std::string name = did.nodes[ctx.decision(k)].name();
        if (rule.node != ctx.decision(k)) throw CoverageError("rule " + std::to_string(k) + " is not for " + name);
        if (rule.observed != ctx.info()[k]) throw CoverageError("rule for " + name + " observes the wrong nodes");
        if (rule.choice.size() != joint_states(did, rule.observed))
            throw CoverageError("rule for " + name + " does not cover every informational state");
        for (auto c : rule.choice)
            if (c >= did.nodes[rule.node].cardinality()) throw CoverageError("rule for " + name + " picks an unknown option");
    }
}

}  // namespace detail

/// Expected total utility (sum over value nodes) of following `policy`.
inline double evaluate_policy(const DeployedDid& did, const Policy& policy) {
    detail::SolveContext ctx(did);
    detail::check_coverage(ctx, policy);
    std::vector<Factor> fs;
    for (std::size_t k = 0; k < ctx.decision_count(); ++k) fs.push_back(ctx.decision_factor(k, policy.rules[k].choice));
    return ctx.expected_utility(fs);
}

/// P(information state) for every decision under `policy`: entry k holds one
/// probability per joint state of decision k's observed nodes.
inline std::vector<std::vector<double>> information_state_probabilities(const DeployedDid& did, const Policy& policy) {
    detail::SolveContext ctx(did);
    detail::check_coverage(ctx, policy);
    std::vector<Factor> fs;
    for (std::size_t k = 0; k < ctx.decision_count(); ++k) fs.push_back(ctx.decision_factor(k, policy.rules[k].choice));
    std::vector<std::vector<double>> out;
    for (std::size_t k = 0; k < ctx.decision_count(); ++k) out.push_back(ctx.marginal(ctx.info()[k], fs).values);
    return out;
}

/// True when `b` picks the same option as `a` in every information state
/// that is reached with positive probability under `a`.
inline bool policies_agree(const DeployedDid& did, const Policy& a, const Policy& b, double eps = 1e-12) {
    if (a.rules.size() != b.rules.size()) return false;
    const auto prob = information_state_probabilities(did, a);
    for (std::size_t k = 0; k < a.rules.size(); ++k) {
        if (a.rules[k].node != b.rules[k].node || a.rules[k].observed != b.rules[k].observed) return false;
        for (std::size_t r = 0; r < a.rules[k].choice.size(); ++r)
            if (prob[k][r] > eps && a.rules[k].choice[r] != b.rules[k].choice[r]) return false;
    }
    return true;
}

struct SolveOptions {
    /// Cap on joint policies enumerated for decisions that cannot be
    /// optimized one at a time.
    std::uint64_t max_enumerated = 50'000'000;
};

/// Maximum expected utility policy under the information structure of
/// information_sets().
///
/// Decisions whose optimal rule is independent of the other rules (extremal
/// decisions, found by d-separation) are peeled off from the back and solved
/// by one local optimization each, with undecided decisions held uniform.
/// Any remainder is solved exactly by enumerating the joint rules of all but
/// one of its decisions and optimizing the last one locally.
inline Policy solve(const DeployedDid& did, SolveOptions options = {}) {
    if (auto v = validate_deployed(did); !v.empty()) throw ValidationError(std::move(v));
    detail::SolveContext ctx(did);
    const std::size_t nd = ctx.decision_count();

    std::vector<std::optional<std::vector<std::size_t>>> rules(nd);
    std::vector<Factor> factors;
    for (std::size_t k = 0; k < nd; ++k) factors.push_back(ctx.decision_factor(k, std::nullopt));

    std::vector<std::size_t> remaining;
    for (std::size_t k = 0; k < nd; ++k) remaining.push_back(k);
    for (bool progress = true; progress && !remaining.empty();) {
        progress = false;
        for (std::size_t r = remaining.size(); r-- > 0;) {
            const std::size_t k = remaining[r];
            if (!ctx.extremal(k, remaining)) continue;
            rules[k] = ctx.best_rule(k, factors);
            factors[k] = ctx.decision_factor(k, rules[k]);
            remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(r));
            progress = true;
            break;
        }
    }

    if (!remaining.empty()) {
        // Optimize the last decision locally and enumerate the earlier ones,
        // earliest slowest, so ties resolve the same way as brute_force.
        const std::size_t pivot = remaining.back();
        auto rule_space = [&](std::size_t k) {
            return std::pow(static_cast<long double>(did.nodes[ctx.decision(k)].cardinality()),
                            static_cast<long double>(joint_states(did, ctx.info()[k])));
        };
        std::vector<std::size_t> others;
        long double combos = 1.0L;
        for (std::size_t k : remaining)
            if (k != pivot) {
                others.push_back(k);
                combos *= rule_space(k);
            }
        if (combos > static_cast<long double>(options.max_enumerated))
            throw CapacityError("solver would enumerate " + std::to_string(static_cast<double>(combos)) +
                                " joint rules, above the cap of " + std::to_string(options.max_enumerated));

        for (std::size_t k : others) rules[k] = std::vector<std::size_t>(joint_states(did, ctx.info()[k]), 0);
        std::optional<double> best;
        std::vector<std::optional<std::vector<std::size_t>>> best_rules;
        for (;;) {
            for (std::size_t k : others) factors[k] = ctx.decision_factor(k, rules[k]);
            rules[pivot] = ctx.best_rule(pivot, factors);
            factors[pivot] = ctx.decision_factor(pivot, rules[pivot]);
            const double value = ctx.expected_utility(factors);
            if (!best || value > *best + utility_tolerance) {
                best = value;
                best_rules = rules;
            }
            // Advance the odometer over the enumerated rules, last entry fastest.
            bool done = true;
            for (std::size_t o = others.size(); o-- > 0 && done;) {
                auto& choice = *rules[others[o]];
                const std::size_t m = did.nodes[ctx.decision(others[o])].cardinality();
                for (std::size_t e = choice.size(); e-- > 0;) {
                    if (++choice[e] < m) {
                        done = false;
                        break;
                    }
                    choice[e] = 0;
                }
            }
            if (done) break;
        }
        rules = std::move(best_rules);
    }

    Policy policy;
    for (std::size_t k = 0; k < nd; ++k) policy.rules.push_back({ctx.decision(k), ctx.info()[k], *rules[k]});
    std::vector<Factor> final_factors;
    for (std::size_t k = 0; k < nd; ++k) final_factors.push_back(ctx.decision_factor(k, rules[k]));
    policy.meu = ctx.expected_utility(final_factors);
    return policy;
}

struct BruteForceOptions {
    std::uint64_t cap = 1'000'000;  // maximum number of policies enumerated
};

/// Verification oracle: enumerates every deterministic policy (earlier
/// decisions' entries varying slowest) and scores each by summing over the
/// full joint distribution. The first policy beating the incumbent by more
/// than the tolerance wins, so ties favour lower option indices.
inline Policy brute_force(const DeployedDid& did, BruteForceOptions options = {}) {
    if (auto v = validate_deployed(did); !v.empty()) throw ValidationError(std::move(v));
    const auto info = information_sets(did);
    const std::uint64_t count = count_policies(did);
    if (count > options.cap)
        throw CapacityError("brute force would enumerate " + std::to_string(count) + " policies, cap is " +
                            std::to_string(options.cap));

    const std::size_t n = did.nodes.size();
    std::vector<std::size_t> decision_pos(n, 0);
    for (std::size_t k = 0; k < info.size(); ++k) decision_pos[did.decision_order[k]] = k;
    std::vector<NodeId> sampled;  // non-value nodes in topological order
    for (NodeId v = 0; v < n; ++v)
        if (did.nodes[v].kind != NodeKind::value) sampled.push_back(v);

    std::vector<std::vector<std::size_t>> choice(info.size());
    for (std::size_t k = 0; k < info.size(); ++k) choice[k].assign(joint_states(did, info[k]), 0);

    std::vector<std::size_t> state(n, 0);
    auto row_of = [&](const std::vector<NodeId>& ps) {
        std::size_t r = 0;
        for (NodeId p : ps) r = r * did.nodes[p].cardinality() + state[p];
        return r;
    };
    double acc = 0.0;
    std::function<void(std::size_t, double)> walk = [&](std::size_t depth, double weight) {
        if (depth == sampled.size()) {
            double u = 0.0;
            for (NodeId v : did.super_value) u += did.nodes[v].table[row_of(did.nodes[v].parents)];
            acc += weight * u;
            return;
        }
        const NodeId v = sampled[depth];
        const auto& node = did.nodes[v];
        if (node.kind == NodeKind::decision) {
            const std::size_t k = decision_pos[v];
            state[v] = choice[k][row_of(info[k])];
            walk(depth + 1, weight);
            return;
        }
        const std::size_t base = row_of(node.parents) * node.cardinality();
        for (std::size_t s = 0; s < node.cardinality(); ++s) {
            const double p = node.table[base + s];
            if (p == 0.0) continue;
            state[v] = s;
            walk(depth + 1, weight * p);
        }
    };

    std::optional<double> best;
    std::vector<std::vector<std::size_t>> best_choice;
    for (;;) {
        acc = 0.0;
        walk(0, 1.0);
        if (!best || acc > *best + utility_tolerance) {
            best = acc;
            best_choice = choice;
        }
        bool done = true;
        for (std::size_t k = info.size(); k-- > 0 && done;) {
            const std::size_t m = did.nodes[did.decision_order[k]].cardinality();
            for (std::size_t e = choice[k].size(); e-- > 0;) {
                if (++choice[k][e] < m) {
                    done = false;
                    break;
                }
                choice[k][e] = 0;
            }
        }
        if (done) break;
    }

    Policy policy;
    for (std::size_t k = 0; k < info.size(); ++k) policy.rules.push_back({did.decision_order[k], info[k], best_choice[k]});
    policy.meu = *best;
    return policy;
}

}  // namespace tdid
