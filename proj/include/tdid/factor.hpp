#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "tdid/deploy.hpp"

namespace tdid {

/// Table over the joint states of `scope`, last variable varying fastest.
struct Factor {
    std::vector<NodeId> scope;
    std::vector<std::size_t> card;
    std::vector<double> values;

    static Factor constant(double v) { return {{}, {}, {v}}; }

    std::size_t size() const noexcept { return values.size(); }
};

namespace detail {

/// Stride of each variable of `scope` when indexing a factor over `target`
/// (0 for variables absent from target).
inline std::vector<std::size_t> strides_in(const std::vector<NodeId>& scope, const Factor& target) {
    std::vector<std::size_t> target_stride(target.scope.size());
    std::size_t s = 1;
    for (std::size_t k = target.scope.size(); k-- > 0;) {
        target_stride[k] = s;
        s *= target.card[k];
    }
    std::vector<std::size_t> out(scope.size(), 0);
    for (std::size_t k = 0; k < scope.size(); ++k) {
        auto it = std::find(target.scope.begin(), target.scope.end(), scope[k]);
        if (it != target.scope.end()) out[k] = target_stride[it - target.scope.begin()];
    }
    return out;
}

}  // namespace detail

inline Factor product(const Factor& a, const Factor& b) {
    Factor out;
    out.scope = a.scope;
    out.card = a.card;
    for (std::size_t k = 0; k < b.scope.size(); ++k) {
        if (std::find(a.scope.begin(), a.scope.end(), b.scope[k]) != a.scope.end()) continue;
        out.scope.push_back(b.scope[k]);
        out.card.push_back(b.card[k]);
    }
    std::size_t total = 1;
    for (auto c : out.card) total *= c;
    out.values.resize(total);
    const auto sa = detail::strides_in(out.scope, a);
    const auto sb = detail::strides_in(out.scope, b);
    std::vector<std::size_t> state(out.scope.size(), 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t r = 0; r < total; ++r) {
        out.values[r] = a.values[ia] * b.values[ib];
        for (std::size_t k = out.scope.size(); k-- > 0;) {
            if (++state[k] < out.card[k]) {
                ia += sa[k];
                ib += sb[k];
                break;
            }
            ia -= sa[k] * (out.card[k] - 1);
            ib -= sb[k] * (out.card[k] - 1);
            state[k] = 0;
        }
    }
    return out;
}

inline Factor sum_out(const Factor& f, NodeId var) {
    auto it = std::find(f.scope.begin(), f.scope.end(), var);
    if (it == f.scope.end()) return f;
    const std::size_t pos = it - f.scope.begin();
    Factor out;
    for (std::size_t k = 0; k < f.scope.size(); ++k) {
        if (k == pos) continue;
        out.scope.push_back(f.scope[k]);
        out.card.push_back(f.card[k]);
    }
    std::size_t inner = 1;
    for (std::size_t k = pos + 1; k < f.card.size(); ++k) inner *= f.card[k];
    const std::size_t n = f.card[pos];
    const std::size_t outer = f.values.size() / (inner * n);
    out.values.assign(outer * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < inner; ++i)
                out.values[o * inner + i] += f.values[(o * n + j) * inner + i];
    return out;
}

/// Re-expresses f over `scope` (in that order); variables of `scope` missing
/// from f are broadcast. Every variable of f must appear in `scope`.
inline Factor align(const Factor& f, const std::vector<NodeId>& scope, const std::vector<std::size_t>& card) {
    Factor shape{scope, card, {}};
    std::size_t total = 1;
    for (auto c : card) total *= c;
    shape.values.assign(total, 1.0);
    return product(shape, f);
}

/// Sums every variable outside `keep` from the product of `factors`, picking
/// the cheapest variable first, and returns a factor over `keep` in order.
inline Factor eliminate(std::vector<Factor> factors, const std::vector<NodeId>& keep,
                        const std::vector<std::size_t>& keep_card) {
    auto kept = [&](NodeId v) { return std::find(keep.begin(), keep.end(), v) != keep.end(); };
    for (;;) {
        NodeId best = 0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (const auto& f : factors)
            for (NodeId v : f.scope) {
                if (kept(v)) continue;
                std::vector<NodeId> seen;
                double cost = 1.0;
                for (const auto& g : factors) {
                    if (std::find(g.scope.begin(), g.scope.end(), v) == g.scope.end()) continue;
                    for (std::size_t k = 0; k < g.scope.size(); ++k)
                        if (std::find(seen.begin(), seen.end(), g.scope[k]) == seen.end()) {
                            seen.push_back(g.scope[k]);
                            cost *= static_cast<double>(g.card[k]);
                        }
                }
                if (cost < best_cost || (cost == best_cost && v < best)) {
                    best_cost = cost;
                    best = v;
                }
            }
        if (best_cost == std::numeric_limits<double>::infinity()) break;
        Factor joint = Factor::constant(1.0);
        std::vector<Factor> rest;
        for (auto& f : factors) {
            if (std::find(f.scope.begin(), f.scope.end(), best) != f.scope.end()) joint = product(joint, f);
            else rest.push_back(std::move(f));
        }
        rest.push_back(sum_out(joint, best));
        factors = std::move(rest);
    }
    Factor result = Factor::constant(1.0);
    for (const auto& f : factors) result = product(result, f);
    return align(result, keep, keep_card);
}

}  // namespace tdid
