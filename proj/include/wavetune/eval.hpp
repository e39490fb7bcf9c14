#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wavetune/tuner.hpp"
#include "wavetune/wave_sim.hpp"

namespace wavetune {

struct EvalRow {
    std::string workload;
    std::string method;
    int macro_id = -1;
    int micro_id = -1;
    double predicted_us = 0.0;  // 0 for methods without a prediction
    double measured_us = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    // method -> geometric-mean speedup vs. the default heuristic
    std::map<std::string, double> geomean_speedup;
    // method -> MAPE of predicted vs. measured latency (predictive methods)
    std::map<std::string, double> mape;
    DecisionStats decision_stats_last;
    int queries = 0;
};

struct EvalParams {
    double sigma = 0.0;
    std::uint64_t seed = 0;
    int reps = 3;
};

// Per query: run the two-stage tuner, both ablation baselines (fitted from
// the same training records as the tables), the exhaustive oracle, and the
// registry default (smallest macro id, its smallest feasible micro), then
// measure every chosen config on the sigma-configured simulator.
EvalReport run_eval(const std::vector<KernelWorkload>& queries,
                    const std::vector<DualTable>& tables,
                    const std::vector<ProfileRecord>& training_records,
                    const ConfigRegistry& registry, const HardwareSpec& hw,
                    const SyntheticKernelGround& ground, const EvalParams& params);

void write_eval_csv(const EvalReport& report, const std::string& path);
std::string eval_summary(const EvalReport& report);

}  // namespace wavetune
