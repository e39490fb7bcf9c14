#include "wavetune/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wavetune/rng.hpp"

namespace wavetune {

namespace {

double measure_config(const HardwareSpec& hw, const KernelWorkload& x,
                      const ConfigRegistry& registry,
                      const SyntheticKernelGround& ground, int macro_id,
                      int micro_id, const EvalParams& params,
                      std::uint64_t query_salt) {
    BlockLatencyModel blm = ground.latency_model(params.sigma);
    auto [g, l] = map_workload(x, registry.macro(macro_id));
    double total = 0.0;
    for (int rep = 0; rep < params.reps; ++rep) {
        SimMachine machine{hw, mix_seed(params.seed, query_salt,
                                        mix_seed(static_cast<std::uint64_t>(macro_id),
                                                 static_cast<std::uint64_t>(micro_id)),
                                        static_cast<std::uint64_t>(rep))};
        total += simulate(machine, g, l, blm, macro_id, micro_id);
    }
    return total / params.reps;
}

}  // namespace

EvalReport run_eval(const std::vector<KernelWorkload>& queries,
                    const std::vector<DualTable>& tables,
                    const std::vector<ProfileRecord>& training_records,
                    const ConfigRegistry& registry, const HardwareSpec& hw,
                    const SyntheticKernelGround& ground,
                    const EvalParams& params) {
    if (queries.empty()) throw std::invalid_argument("empty eval query set");
    registry.validate();

    BaselinePredictor step_bp = fit_step_baseline(training_records);
    BaselinePredictor linear_bp = fit_linear_baseline(training_records);

    // Default heuristic stub: smallest macro id, its smallest feasible micro.
    int default_macro = registry.macros.front().id;
    for (const auto& m : registry.macros)
        default_macro = std::min(default_macro, m.id);
    int default_micro = registry.feasible_micros(default_macro).front();

    EvalReport report;
    report.queries = static_cast<int>(queries.size());

    std::map<std::string, double> log_sum;   // sum of log(T_default / T_method)
    std::map<std::string, double> mape_sum;
    std::map<std::string, int> mape_count;

    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const KernelWorkload& x = queries[qi];
        const std::string desc = workload_to_string(x);
        const auto salt = static_cast<std::uint64_t>(qi);

        struct Choice {
            std::string method;
            int macro_id, micro_id;
            double predicted;
        };
        std::vector<Choice> choices;

        Tuned wt = tune(x, tables, registry, hw);
        report.decision_stats_last = wt.stats;
        choices.push_back({"wavetune", wt.macro_id, wt.micro_id,
                           wt.predicted_latency_us});

        Tuned st = baseline_tune(x, step_bp, tables, registry, hw);
        choices.push_back({"step", st.macro_id, st.micro_id,
                           st.predicted_latency_us});

        Tuned ln = baseline_tune(x, linear_bp, tables, registry, hw);
        choices.push_back({"linear", ln.macro_id, ln.micro_id,
                           ln.predicted_latency_us});

        SimMachine oracle_machine{hw, mix_seed(params.seed, salt, 0x0eac1eULL)};
        OracleResult best = oracle_best(oracle_machine, x, registry, ground,
                                        params.sigma, params.reps);
        choices.push_back({"oracle", best.macro_id, best.micro_id, 0.0});

        choices.push_back({"default", default_macro, default_micro, 0.0});

        double default_measured = 0.0;
        std::vector<EvalRow> query_rows;
        for (const auto& c : choices) {
            double measured = measure_config(hw, x, registry, ground, c.macro_id,
                                             c.micro_id, params, salt);
            if (c.method == "default") default_measured = measured;
            query_rows.push_back({desc, c.method, c.macro_id, c.micro_id,
                                  c.predicted, measured});
            if (c.predicted > 0.0) {
                mape_sum[c.method] +=
                    std::abs(c.predicted - measured) / measured;
                mape_count[c.method] += 1;
            }
        }
        for (const auto& row : query_rows)
            log_sum[row.method] += std::log(default_measured / row.measured_us);
        report.rows.insert(report.rows.end(), query_rows.begin(),
                           query_rows.end());
    }

    for (const auto& [method, total] : log_sum)
        report.geomean_speedup[method] = std::exp(total / report.queries);
    for (const auto& [method, total] : mape_sum)
        report.mape[method] = total / mape_count[method];
    return report;
}

void write_eval_csv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write eval report: " + path);
    out << "workload,method,macro_id,micro_id,predicted_us,measured_us\n";
    char buf[128];
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", row.predicted_us,
                      row.measured_us);
        out << '"' << row.workload << "\"," << row.method << ',' << row.macro_id
            << ',' << row.micro_id << ',' << buf << '\n';
    }
}

std::string eval_summary(const EvalReport& report) {
    std::ostringstream out;
    out << "queries: " << report.queries << "\n";
    out << "geometric-mean speedup vs default heuristic:\n";
    for (const auto& [method, speedup] : report.geomean_speedup)
        out << "  " << method << ": " << speedup << "\n";
    out << "prediction MAPE vs measured:\n";
    for (const auto& [method, mape] : report.mape)
        out << "  " << method << ": " << mape * 100.0 << "%\n";
    out << "decision stats (last query): model_evals="
        << report.decision_stats_last.model_evals
        << " anchor_comparisons=" << report.decision_stats_last.anchor_comparisons
        << "\n";
    return out.str();
}

}  // namespace wavetune
