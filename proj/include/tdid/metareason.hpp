#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdid/error.hpp"
#include "tdid/text.hpp"

namespace tdid {

/// One candidate model of the suite M.
struct SuiteEntry {
    std::string id;
    std::optional<double> quality;  // u*(m_i); present once solved
    std::size_t space_size = 1;     // S_i, deployed CPT entries
    std::size_t n_intervals = 1;    // N_i, |T_m|
    double cost_time = 0.0;         // seconds
    std::vector<std::string> tags;
    std::optional<double> measured_time;  // recorded wall-clock solve time

    bool has_tag(const std::string& t) const { return std::find(tags.begin(), tags.end(), t) != tags.end(); }
};

/// C_i(S_i, N_i). Analytic mode: alpha * S_i + beta (S_i already grows with
/// N_i). Measured mode: the recorded solve time.
struct CostModel {
    enum class Mode { analytic, measured };
    Mode mode = Mode::analytic;
    double alpha = 0.0;
    double beta = 0.0;
};

inline double estimate_cost(const SuiteEntry& entry, const CostModel& model) {
    if (model.mode == CostModel::Mode::measured) {
        if (!entry.measured_time) throw SelectionError("no measured solve time recorded for '" + entry.id + "'");
        return *entry.measured_time;
    }
    if (model.alpha < 0.0 || model.beta < 0.0) throw SelectionError("cost model parameters must be nonnegative");
    return model.alpha * static_cast<double>(entry.space_size) + model.beta;
}

/// u_c = u*(m_i) - C_i, with the cost converted to utility units.
inline double comprehensive_value(const SuiteEntry& entry, double utility_per_second = 1.0) {
    if (!entry.quality) throw SelectionError("model '" + entry.id + "' has not been solved");
    return *entry.quality - utility_per_second * entry.cost_time;
}

/// Inference-related cost u_i(t), in utility units, nondecreasing in t.
class UrgencyFunction {
public:
    enum class Kind { linear, step, tabulated };

    static UrgencyFunction linear(double rate) {
        if (!(rate >= 0.0)) throw SelectionError("linear urgency rate must be nonnegative");
        UrgencyFunction u;
        u.kind_ = Kind::linear;
        u.params_ = {rate};
        return u;
    }

    /// 0 up to and including `deadline`, `penalty` afterwards.
    static UrgencyFunction step(double deadline, double penalty) {
        if (!(deadline >= 0.0) || !(penalty >= 0.0))
            throw SelectionError("step urgency needs a nonnegative deadline and penalty");
        UrgencyFunction u;
        u.kind_ = Kind::step;
        u.params_ = {deadline, penalty};
        return u;
    }

    /// Piecewise linear through (t, u) points sorted by t; constant outside.
    static UrgencyFunction tabulated(std::vector<std::pair<double, double>> points) {
        if (points.empty()) throw SelectionError("tabulated urgency needs at least one point");
        for (std::size_t k = 1; k < points.size(); ++k)
            if (points[k].first <= points[k - 1].first || points[k].second < points[k - 1].second)
                throw SelectionError("tabulated urgency must have increasing t and nondecreasing values");
        UrgencyFunction u;
        u.kind_ = Kind::tabulated;
        u.params_.clear();
        for (auto [t, v] : points) {
            u.params_.push_back(t);
            u.params_.push_back(v);
        }
        return u;
    }

    /// `linear:<rate>`, `step:<deadline>,<penalty>` or `table:<t>=<u>,<t>=<u>,...`.
    static UrgencyFunction parse(const std::string& spec) {
        auto colon = spec.find(':');
        if (colon == std::string::npos) throw SelectionError("urgency must look like linear:<rate> or step:<d>,<p>");
        const std::string kind = spec.substr(0, colon);
        std::vector<std::string> parts;
        std::string cur;
        for (char c : spec.substr(colon + 1)) {
            if (c == ',') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        parts.push_back(cur);
        auto num = [&](const std::string& s) {
            try {
                return text::parse_real(s, 0);
            } catch (const ParseError&) {
                throw SelectionError("bad number '" + s + "' in urgency '" + spec + "'");
            }
        };
        if (kind == "linear" && parts.size() == 1) return linear(num(parts[0]));
        if (kind == "step" && parts.size() == 2) return step(num(parts[0]), num(parts[1]));
        if (kind == "table") {
            std::vector<std::pair<double, double>> pts;
            for (const auto& p : parts) {
                auto eq = p.find('=');
                if (eq == std::string::npos) throw SelectionError("table urgency points look like t=u");
                pts.emplace_back(num(p.substr(0, eq)), num(p.substr(eq + 1)));
            }
            return tabulated(std::move(pts));
        }
        throw SelectionError("unrecognized urgency '" + spec + "'");
    }

    double operator()(double t) const {
        switch (kind_) {
            case Kind::linear: return params_[0] * t;
            case Kind::step: return t > params_[0] ? params_[1] : 0.0;
            case Kind::tabulated: {
                const std::size_t n = params_.size() / 2;
                if (t <= params_[0]) return params_[1];
                for (std::size_t k = 1; k < n; ++k) {
                    double t0 = params_[2 * k - 2], t1 = params_[2 * k];
                    if (t <= t1) {
                        double u0 = params_[2 * k - 1], u1 = params_[2 * k + 1];
                        return u0 + (u1 - u0) * (t - t0) / (t1 - t0);
                    }
                }
                return params_[2 * n - 1];
            }
        }
        return 0.0;
    }

    Kind kind() const noexcept { return kind_; }
    const std::vector<double>& parameters() const noexcept { return params_; }

private:
    Kind kind_ = Kind::linear;
    std::vector<double> params_{0.0};
};

struct QualityAt {
    double value;       // Q(M<=t)
    std::size_t entry;  // index of the maximizing entry
};

/// Q(M<=t): best quality among entries whose cost is at most t. Ties go to
/// the cheaper entry, then to suite order.
inline QualityAt quality(std::span<const SuiteEntry> suite, double t) {
    if (suite.empty()) throw SelectionError("empty model suite");
    std::optional<QualityAt> best;
    for (std::size_t k = 0; k < suite.size(); ++k) {
        const auto& e = suite[k];
        if (e.cost_time > t) continue;
        if (!e.quality) throw SelectionError("model '" + e.id + "' has not been solved");
        if (!best || *e.quality > best->value ||
            (*e.quality == best->value && e.cost_time < suite[best->entry].cost_time))
            best = QualityAt{*e.quality, k};
    }
    if (!best) throw SelectionError("no model can be solved within t = " + text::format_real(t));
    return *best;
}

/// EVC(t) = [Q(M<=t) - Q(M<=t0)] - [u_i(t) - u_i(t0)].
inline double evc(std::span<const SuiteEntry> suite, const UrgencyFunction& urgency, double t0, double t) {
    if (t < t0) throw SelectionError("EVC is defined for t >= t0");
    const double q0 = quality(suite, t0).value;
    const double q = quality(suite, t).value;
    return (q - q0) - (urgency(t) - urgency(t0));
}

struct EvcPoint {
    double t;
    double q;    // Q(M<=t)
    double uc;   // Q(M<=t) - u_i(t)
    double evc;
    std::size_t entry;
};

struct EvcCurve {
    double t0 = 0.0;
    std::vector<EvcPoint> points;
    double t_star = 0.0;
    std::size_t best = 0;  // suite index of m**
    double best_quality = 0.0;
};

/// Ties in EVC are broken toward smaller t.
inline constexpr double evc_tolerance = 1e-9;

/// Evaluates EVC at t0 and at every distinct cost above it (Q only changes
/// there) and picks t* and m**.
inline EvcCurve select(std::span<const SuiteEntry> suite, const UrgencyFunction& urgency, double t0) {
    std::vector<double> ts{t0};
    for (const auto& e : suite)
        if (e.cost_time > t0) ts.push_back(e.cost_time);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    EvcCurve curve;
    curve.t0 = t0;
    const auto base = quality(suite, t0);
    const double u0 = urgency(t0);
    std::optional<std::size_t> arg;
    for (double t : ts) {
        const auto q = quality(suite, t);
        const double ut = urgency(t);
        EvcPoint p{t, q.value, q.value - ut, (q.value - base.value) - (ut - u0), q.entry};
        if (!arg || p.evc > curve.points[*arg].evc + evc_tolerance) arg = curve.points.size();
        curve.points.push_back(p);
    }
    curve.t_star = curve.points[*arg].t;
    curve.best = curve.points[*arg].entry;
    curve.best_quality = curve.points[*arg].q;
    return curve;
}

}  // namespace tdid
