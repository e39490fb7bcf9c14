#include "wavetune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace wavetune {

std::pair<double, Regime> predict_latency(const DualTable& table, i64 g, i64 l,
                                          const HardwareSpec& hw,
                                          std::vector<std::string>* flags) {
    if (g < 1 || l < 1)
        throw std::invalid_argument("grid size and loop count must be >= 1");
    int w = wave_count(g, hw);
    if (w > table.W)
        return {table.theta_ext.predict(g, l), Regime{true, w}};

    auto it = table.coeff_table.find(w);
    if (it == table.coeff_table.end()) {
        // Profiled regime but no fitted bucket: nearest wave, smaller first.
        if (table.coeff_table.empty())
            throw std::runtime_error("dual table for macro " +
                                     std::to_string(table.macro_id) +
                                     " has no coefficient entries");
        int best_w = 0;
        int best_dist = std::numeric_limits<int>::max();
        for (const auto& [cand, _] : table.coeff_table) {
            int dist = std::abs(cand - w);
            if (dist < best_dist || (dist == best_dist && cand < best_w)) {
                best_w = cand;
                best_dist = dist;
            }
        }
        if (flags)
            flags->push_back("missing_wave_" + std::to_string(w) + "_used_" +
                             std::to_string(best_w));
        it = table.coeff_table.find(best_w);
    }
    return {it->second.predict(g, l), Regime{false, w}};
}

i64 nearest_anchor(const std::vector<i64>& sorted_anchors, i64 l,
                   int* comparisons) {
    if (sorted_anchors.empty())
        throw std::invalid_argument("nearest_anchor: empty anchor list");
    int comps = 0;
    std::size_t lo = 0, hi = sorted_anchors.size();
    while (lo < hi) {  // first anchor >= l
        std::size_t mid = (lo + hi) / 2;
        ++comps;
        if (sorted_anchors[mid] < l)
            lo = mid + 1;
        else
            hi = mid;
    }
    i64 result;
    if (lo == 0) {
        result = sorted_anchors.front();
    } else if (lo == sorted_anchors.size()) {
        result = sorted_anchors.back();
    } else {
        i64 below = sorted_anchors[lo - 1], above = sorted_anchors[lo];
        ++comps;
        result = (l - below <= above - l) ? below : above;  // tie: smaller
    }
    if (comparisons) *comparisons = comps;
    return result;
}

namespace {

// Stage II: micro retrieval from the winner's anchor map; falls back to the
// nearest wave's map when the regime's map is empty.
int retrieve_micro(const DualTable& table, const Regime& regime, i64 l,
                   DecisionStats& stats, std::vector<std::string>& flags) {
    const std::map<i64, int>* anchor_map = nullptr;
    if (regime.extrapolated) {
        if (!table.ext_anchors.empty()) anchor_map = &table.ext_anchors;
    } else {
        auto it = table.anchor_table.find(regime.w);
        if (it != table.anchor_table.end() && !it->second.empty())
            anchor_map = &it->second;
    }
    if (!anchor_map) {
        int best_w = 0;
        int best_dist = std::numeric_limits<int>::max();
        int target_w = regime.extrapolated ? table.W : regime.w;
        for (const auto& [w, per_l] : table.anchor_table) {
            if (per_l.empty()) continue;
            int dist = std::abs(w - target_w);
            if (dist < best_dist || (dist == best_dist && w < best_w)) {
                best_w = w;
                best_dist = dist;
            }
        }
        if (best_dist == std::numeric_limits<int>::max())
            throw std::runtime_error("dual table for macro " +
                                     std::to_string(table.macro_id) +
                                     " has no anchor entries");
        flags.push_back("anchor_fallback_wave_" + std::to_string(best_w));
        anchor_map = &table.anchor_table.at(best_w);
    }

    std::vector<i64> anchors;
    anchors.reserve(anchor_map->size());
    for (const auto& [anchor_l, _] : *anchor_map) anchors.push_back(anchor_l);
    int comps = 0;
    i64 chosen = nearest_anchor(anchors, l, &comps);
    stats.anchor_comparisons = comps;
    return anchor_map->at(chosen);
}

template <typename PredictFn>
Tuned two_stage_select(const KernelWorkload& x,
                       const std::vector<DualTable>& tables,
                       const ConfigRegistry& registry, const HardwareSpec& hw,
                       PredictFn&& predict) {
    if (tables.empty()) throw std::invalid_argument("no dual tables provided");

    Tuned best;
    const DualTable* best_table = nullptr;
    double best_latency = std::numeric_limits<double>::infinity();
    DecisionStats stats;

    std::vector<const DualTable*> ordered;
    for (const auto& t : tables) ordered.push_back(&t);
    std::sort(ordered.begin(), ordered.end(),
              [](const DualTable* a, const DualTable* b) {
                  return a->macro_id < b->macro_id;
              });

    std::vector<std::string> flags;
    for (const DualTable* table : ordered) {
        const MacroConfig& macro = registry.macro(table->macro_id);
        auto [g, l] = map_workload(x, macro);
        auto [latency, regime] = predict(*table, g, l, flags);
        ++stats.model_evals;
        if (latency < best_latency) {  // strict: ties keep the smaller id
            best_latency = latency;
            best_table = table;
            best.macro_id = table->macro_id;
            best.predicted_latency_us = latency;
            best.g = g;
            best.l = l;
            best.regime = regime;
        }
    }

    best.micro_id = retrieve_micro(*best_table, best.regime, best.l, stats, flags);
    best.stats = stats;
    best.flags = std::move(flags);
    return best;
}

}  // namespace

Tuned tune(const KernelWorkload& x, const std::vector<DualTable>& tables,
           const ConfigRegistry& registry, const HardwareSpec& hw) {
    return two_stage_select(
        x, tables, registry, hw,
        [&hw](const DualTable& t, i64 g, i64 l, std::vector<std::string>& flags) {
            return predict_latency(t, g, l, hw, &flags);
        });
}

// ---- Baselines -------------------------------------------------------------

namespace {

// Shared-micro-selected samples per (macro, w, l), the same data the dual
// tables are fitted from.
std::map<int, std::vector<std::tuple<int, i64, i64, double>>> selected_samples(
    const std::vector<ProfileRecord>& records) {
    std::map<std::tuple<int, int, i64>, std::vector<ProfileRecord>> groups;
    for (const auto& r : records)
        groups[{r.macro_id, r.w, r.l}].push_back(r);
    std::map<int, std::vector<std::tuple<int, i64, i64, double>>> out;
    for (const auto& [key, group] : groups) {
        auto [macro_id, w, l] = key;
        SharedMicroSelection sel = select_shared_micro(group);
        for (const auto& [g, t] : sel.samples)
            out[macro_id].emplace_back(w, g, l, t);
    }
    return out;
}

}  // namespace

BaselinePredictor fit_step_baseline(const std::vector<ProfileRecord>& records) {
    BaselinePredictor bp;
    bp.kind = BaselinePredictor::Kind::Step;
    // Per (macro, anchor): least-squares slope of T against wave count,
    // T ~ t_wave * w  =>  t_wave = sum(w*T) / sum(w^2).
    std::map<std::pair<int, i64>, std::pair<double, double>> acc;
    for (const auto& [macro_id, samples] : selected_samples(records)) {
        for (const auto& [w, g, l, t] : samples) {
            auto& [num, den] = acc[{macro_id, l}];
            num += static_cast<double>(w) * t;
            den += static_cast<double>(w) * static_cast<double>(w);
        }
    }
    for (const auto& [key, nd] : acc) bp.step.t_wave[key] = nd.first / nd.second;
    return bp;
}

BaselinePredictor fit_linear_baseline(const std::vector<ProfileRecord>& records) {
    BaselinePredictor bp;
    bp.kind = BaselinePredictor::Kind::GlobalLinear;
    for (const auto& [macro_id, samples] : selected_samples(records)) {
        std::vector<FitSample> fit_samples;
        for (const auto& [w, g, l, t] : samples)
            fit_samples.push_back(
                {static_cast<double>(g), static_cast<double>(l), t});
        bp.linear.theta[macro_id] = fit_bucket(fit_samples).coeffs;
    }
    return bp;
}

double baseline_predict(const BaselinePredictor& bp, int macro_id, i64 g, i64 l,
                        const HardwareSpec& hw) {
    if (bp.kind == BaselinePredictor::Kind::GlobalLinear) {
        auto it = bp.linear.theta.find(macro_id);
        if (it == bp.linear.theta.end())
            throw std::out_of_range("no linear baseline for macro " +
                                    std::to_string(macro_id));
        return it->second.predict(g, l);
    }
    std::vector<i64> anchors;
    for (const auto& [key, _] : bp.step.t_wave)
        if (key.first == macro_id) anchors.push_back(key.second);
    if (anchors.empty())
        throw std::out_of_range("no step baseline for macro " +
                                std::to_string(macro_id));
    i64 anchor = nearest_anchor(anchors, l);
    return bp.step.t_wave.at({macro_id, anchor}) * wave_count(g, hw);
}

Tuned baseline_tune(const KernelWorkload& x, const BaselinePredictor& bp,
                    const std::vector<DualTable>& tables,
                    const ConfigRegistry& registry, const HardwareSpec& hw) {
    return two_stage_select(
        x, tables, registry, hw,
        [&](const DualTable& t, i64 g, i64 l, std::vector<std::string>&) {
            double latency = baseline_predict(bp, t.macro_id, g, l, hw);
            return std::pair<double, Regime>{
                latency, Regime{wave_count(g, hw) > t.W, wave_count(g, hw)}};
        });
}

}  // namespace wavetune
