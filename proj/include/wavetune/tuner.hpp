#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wavetune/kernel_map.hpp"
#include "wavetune/model.hpp"

namespace wavetune {

struct DecisionStats {
    int model_evals = 0;
    int anchor_comparisons = 0;
};

struct Regime {
    bool extrapolated = false;
    int w = 0;  // meaningful when !extrapolated

    bool operator==(const Regime&) const = default;
};

struct Tuned {
    int macro_id = -1;
    int micro_id = -1;
    double predicted_latency_us = 0.0;
    i64 g = 0;
    i64 l = 0;
    Regime regime;
    DecisionStats stats;
    std::vector<std::string> flags;
};

// Wave-conditioned prediction with the extrapolation switch: wave-local
// coefficients for w <= W, theta_ext beyond the profiled horizon.
std::pair<double, Regime> predict_latency(const DualTable& table, i64 g, i64 l,
                                          const HardwareSpec& hw,
                                          std::vector<std::string>* flags = nullptr);

// Nearest anchor by |l - anchor|, ties to the smaller anchor; binary search
// over the sorted anchor list, counting comparisons.
i64 nearest_anchor(const std::vector<i64>& sorted_anchors, i64 l,
                   int* comparisons = nullptr);

// Two-stage runtime selection. Stage I: argmin of predicted latency over all
// macro candidates (ties by smallest macro_id). Stage II: micro retrieval
// from the winner's anchor map for the active regime. Pure function; no
// measurement backend is reachable from here.
Tuned tune(const KernelWorkload& x, const std::vector<DualTable>& tables,
           const ConfigRegistry& registry, const HardwareSpec& hw);

// ---- Ablation baselines ----------------------------------------------------

struct StepPredictor {
    // (macro_id, loop anchor) -> per-wave latency
    std::map<std::pair<int, i64>, double> t_wave;
};

struct GlobalLinearPredictor {
    std::map<int, BilinearCoeffs> theta;  // macro_id -> single global fit
};

struct BaselinePredictor {
    enum class Kind { Step, GlobalLinear } kind = Kind::Step;
    StepPredictor step;
    GlobalLinearPredictor linear;
};

// Both baselines are fitted from the same shared-micro-selected samples as
// the dual tables, differing only in model structure.
BaselinePredictor fit_step_baseline(const std::vector<ProfileRecord>& records);
BaselinePredictor fit_linear_baseline(const std::vector<ProfileRecord>& records);

double baseline_predict(const BaselinePredictor& bp, int macro_id, i64 g, i64 l,
                        const HardwareSpec& hw);

// Baseline variants of the two-stage tuner: Stage I uses the baseline
// predictor, Stage II reuses the dual tables' anchor maps.
Tuned baseline_tune(const KernelWorkload& x, const BaselinePredictor& bp,
                    const std::vector<DualTable>& tables,
                    const ConfigRegistry& registry, const HardwareSpec& hw);

}  // namespace wavetune
