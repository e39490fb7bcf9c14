#include <cstdint>
#include <fstream>
#include <memory>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavetune/eval.hpp"
#include "wavetune/kernel_map.hpp"
#include "wavetune/model.hpp"
#include "wavetune/profiler.hpp"
#include "wavetune/rng.hpp"
#include "wavetune/tuner.hpp"
#include "wavetune/wave_sim.hpp"

using namespace wavetune;

namespace {

std::vector<i64> parse_int_list(const std::string& text) {
    std::vector<i64> out;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) out.push_back(std::stoll(part));
    if (out.empty()) throw CLI::ValidationError("empty integer list");
    return out;
}

// Accepts "a..b" or a comma-separated list.
std::vector<i64> parse_g_spec(const std::string& text) {
    auto dots = text.find("..");
    if (dots != std::string::npos) {
        i64 a = std::stoll(text.substr(0, dots));
        i64 b = std::stoll(text.substr(dots + 2));
        if (a < 1 || b < a) throw CLI::ValidationError("bad grid range " + text);
        std::vector<i64> out;
        for (i64 g = a; g <= b; ++g) out.push_back(g);
        return out;
    }
    return parse_int_list(text);
}

std::vector<KernelWorkload> read_workloads(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open workload file: " + path);
    std::vector<KernelWorkload> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        out.push_back(workload_from_string(line));
    }
    if (out.empty()) throw std::runtime_error("no workloads in " + path);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wave-aware kernel auto-tuning pipeline"};
    app.require_subcommand(1);

    // Shared flag storage.
    std::string family_str = "gemm", out_path, registry_path, tables_path,
                dataset_path, ground_path, plan_path, workload_str, queries_path,
                backend_str = "sim", command_str, hw_name = "sim";
    int W = 40, I = 4, n_sm = 132, blocks_per_sm = 1, p = 10, reps = 5, warmup = 3;
    double tau = 1.1, sigma = 0.0, mu = 0.0;
    std::uint64_t seed = 0;
    std::string anchors_str, g_spec;
    i64 n_heads = 0, loop_l = 1;

    auto* plan_cmd = app.add_subcommand("plan", "write a wave-aligned sampling plan");
    plan_cmd->add_option("--family", family_str, "kernel family");
    plan_cmd->add_option("--W", W, "max profiled wave count");
    plan_cmd->add_option("--I", I, "sub-intervals per wave");
    plan_cmd->add_option("--tau", tau, "grid aspect-ratio upper bound");
    plan_cmd->add_option("--n-sm", n_sm, "number of SMs");
    plan_cmd->add_option("--blocks-per-sm", blocks_per_sm, "resident blocks per SM");
    plan_cmd->add_option("--anchors", anchors_str, "loop anchors, comma separated")
        ->required();
    plan_cmd->add_option("--n-heads", n_heads, "attention head count");
    plan_cmd->add_option("--hw-name", hw_name, "hardware label");
    plan_cmd->add_option("--out", out_path, "output plan file")->required();

    auto* profile_cmd =
        app.add_subcommand("profile", "run the sparse profiling sweep");
    profile_cmd->add_option("--plan", plan_path, "sampling plan file")->required();
    profile_cmd->add_option("--registry", registry_path, "config registry file")
        ->required();
    profile_cmd->add_option("--backend", backend_str, "sim | csv | cmd");
    profile_cmd->add_option("--ground", ground_path, "synthetic ground truth file");
    profile_cmd->add_option("--dataset", dataset_path, "replay dataset (csv backend)");
    profile_cmd->add_option("--cmd", command_str, "measurement command (cmd backend)");
    profile_cmd->add_option("--sigma", sigma, "block latency stddev, us");
    profile_cmd->add_option("--seed", seed, "master seed");
    profile_cmd->add_option("--reps", reps, "measured iterations");
    profile_cmd->add_option("--warmup", warmup, "warm-up iterations");
    profile_cmd->add_option("--out", out_path, "output dataset csv")->required();

    auto* fit_cmd = app.add_subcommand("fit", "fit dual tables from a dataset");
    fit_cmd->add_option("--dataset", dataset_path, "profile dataset csv")->required();
    fit_cmd->add_option("--registry", registry_path, "config registry file")
        ->required();
    fit_cmd->add_option("--W", W, "profiled horizon (0: max wave in data)");
    fit_cmd->add_option("--p", p, "extrapolation window length");
    fit_cmd->add_option("--hw-name", hw_name, "hardware label");
    fit_cmd->add_option("--out", out_path, "output table artifact")->required();

    auto* tune_cmd = app.add_subcommand("tune", "two-stage runtime selection");
    tune_cmd->add_option("--tables", tables_path, "table artifact file")->required();
    tune_cmd->add_option("--registry", registry_path, "config registry file")
        ->required();
    tune_cmd->add_option("--n-sm", n_sm, "number of SMs");
    tune_cmd->add_option("--blocks-per-sm", blocks_per_sm, "resident blocks per SM");
    tune_cmd->add_option("--workload", workload_str,
                         "single workload, e.g. dense_gemm,4096,4096,4096");
    tune_cmd->add_option("--dataset", queries_path, "batch workload file");
    tune_cmd->add_option("--out", out_path, "output csv (default stdout)");

    auto* sim_cmd = app.add_subcommand("simulate", "latency-vs-grid-size sweeps");
    sim_cmd->add_option("--g", g_spec, "grid sizes: a..b or comma list")->required();
    sim_cmd->add_option("--l", loop_l, "loop count");
    sim_cmd->add_option("--mu", mu, "mean block latency, us");
    sim_cmd->add_option("--ground", ground_path, "ground truth file (instead of --mu)");
    sim_cmd->add_option("--sigma", sigma, "block latency stddev, us");
    sim_cmd->add_option("--n-sm", n_sm, "number of SMs");
    sim_cmd->add_option("--blocks-per-sm", blocks_per_sm, "resident blocks per SM");
    sim_cmd->add_option("--seed", seed, "master seed");
    sim_cmd->add_option("--out", out_path, "output csv (default stdout)");

    auto* eval_cmd = app.add_subcommand("eval", "compare tuner, baselines, oracle");
    eval_cmd->add_option("--tables", tables_path, "table artifact file")->required();
    eval_cmd->add_option("--registry", registry_path, "config registry file")
        ->required();
    eval_cmd->add_option("--dataset", dataset_path, "training dataset csv")
        ->required();
    eval_cmd->add_option("--queries", queries_path, "eval workload file")->required();
    eval_cmd->add_option("--ground", ground_path, "ground truth file")->required();
    eval_cmd->add_option("--sigma", sigma, "block latency stddev, us");
    eval_cmd->add_option("--seed", seed, "master seed");
    eval_cmd->add_option("--reps", reps, "measurement repetitions");
    eval_cmd->add_option("--n-sm", n_sm, "number of SMs");
    eval_cmd->add_option("--blocks-per-sm", blocks_per_sm, "resident blocks per SM");
    eval_cmd->add_option("--out", out_path, "report csv path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan_cmd->parsed()) {
            HardwareSpec hw{n_sm, blocks_per_sm, hw_name};
            PlanParams params;
            params.W = W;
            params.I = I;
            params.tau = tau;
            params.loop_anchors = parse_int_list(anchors_str);
            if (n_heads > 0) params.n_heads = n_heads;
            SamplingPlan plan = build_plan(hw, family_from_name(family_str), params);
            plan.save(out_path);
            std::cout << "plan: " << plan.grid_points.size() << " grid points, "
                      << plan.loop_anchors.size() << " loop anchors -> " << out_path
                      << "\n";
        } else if (profile_cmd->parsed()) {
            SamplingPlan plan = SamplingPlan::load(plan_path);
            ConfigRegistry registry = ConfigRegistry::load(registry_path);
            std::unique_ptr<MeasurementBackend> backend;
            if (backend_str == "sim") {
                if (ground_path.empty())
                    throw std::runtime_error("sim backend requires --ground");
                backend = std::make_unique<SimulatorBackend>(
                    plan.hw, SyntheticKernelGround::load(ground_path), sigma, seed,
                    warmup, reps);
            } else if (backend_str == "csv") {
                if (dataset_path.empty())
                    throw std::runtime_error("csv backend requires --dataset");
                backend = std::make_unique<CsvReplayBackend>(
                    CsvReplayBackend::from_file(dataset_path));
            } else if (backend_str == "cmd") {
                if (command_str.empty())
                    throw std::runtime_error("cmd backend requires --cmd");
                backend = std::make_unique<ExternalCommandBackend>(command_str);
            } else {
                throw std::runtime_error("unknown backend: " + backend_str);
            }
            auto records = run_profile(plan, registry, *backend);
            write_records(records, out_path);
            std::cout << "profile: " << records.size() << " records -> " << out_path
                      << "\n";
        } else if (fit_cmd->parsed()) {
            auto records = read_records(dataset_path);
            ConfigRegistry registry = ConfigRegistry::load(registry_path);
            TableBuildParams params;
            params.W = fit_cmd->count("--W") ? W : 0;
            params.p = p;
            HardwareSpec hw{1, 1, hw_name};
            TableArtifact artifact;
            artifact.family = registry.family;
            artifact.tables = build_dual_table(records, registry, hw, params);
            save_tables(artifact, out_path);
            std::cout << "fit: " << artifact.tables.size() << " dual tables -> "
                      << out_path << "\n";
        } else if (tune_cmd->parsed()) {
            TableArtifact artifact = load_tables(tables_path);
            ConfigRegistry registry = ConfigRegistry::load(registry_path);
            HardwareSpec hw{n_sm, blocks_per_sm, hw_name};
            std::vector<KernelWorkload> workloads;
            if (!workload_str.empty())
                workloads.push_back(workload_from_string(workload_str));
            else if (!queries_path.empty())
                workloads = read_workloads(queries_path);
            else
                throw std::runtime_error("tune needs --workload or --dataset");
            std::ostringstream csv;
            csv << "workload,macro_id,micro_id,predicted_us,regime,model_evals,"
                   "anchor_comparisons\n";
            for (const auto& x : workloads) {
                Tuned t = tune(x, artifact.tables, registry, hw);
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.17g", t.predicted_latency_us);
                csv << '"' << workload_to_string(x) << "\"," << t.macro_id << ','
                    << t.micro_id << ',' << buf << ','
                    << (t.regime.extrapolated
                            ? std::string("extrapolated")
                            : "profiled_w" + std::to_string(t.regime.w))
                    << ',' << t.stats.model_evals << ','
                    << t.stats.anchor_comparisons << '\n';
            }
            if (out_path.empty()) {
                std::cout << csv.str();
            } else {
                std::ofstream out(out_path);
                if (!out) throw std::runtime_error("cannot write " + out_path);
                out << csv.str();
                std::cout << "tune: " << workloads.size() << " decisions -> "
                          << out_path << "\n";
            }
        } else if (sim_cmd->parsed()) {
            HardwareSpec hw{n_sm, blocks_per_sm, hw_name};
            BlockLatencyModel blm;
            if (!ground_path.empty())
                blm = SyntheticKernelGround::load(ground_path).latency_model(sigma);
            else if (mu > 0)
                blm = BlockLatencyModel::constant(mu, sigma);
            else
                throw std::runtime_error("simulate needs --mu or --ground");
            SimMachine machine{hw, seed};
            auto points = sweep_profile(machine, parse_g_spec(g_spec), loop_l, blm);
            std::ostringstream csv;
            csv << "g,l,sigma,seed,latency_us\n";
            char buf[64];
            for (const auto& pt : points) {
                std::snprintf(buf, sizeof buf, "%.17g", pt.latency_us);
                csv << pt.g << ',' << loop_l << ',' << sigma << ',' << seed << ','
                    << buf << '\n';
            }
            if (out_path.empty()) {
                std::cout << csv.str();
            } else {
                std::ofstream out(out_path);
                if (!out) throw std::runtime_error("cannot write " + out_path);
                out << csv.str();
                std::cout << "simulate: " << points.size() << " points -> "
                          << out_path << "\n";
            }
        } else if (eval_cmd->parsed()) {
            TableArtifact artifact = load_tables(tables_path);
            ConfigRegistry registry = ConfigRegistry::load(registry_path);
            HardwareSpec hw{n_sm, blocks_per_sm, hw_name};
            EvalParams params;
            params.sigma = sigma;
            params.seed = seed;
            params.reps = reps;
            EvalReport report = run_eval(read_workloads(queries_path),
                                         artifact.tables, read_records(dataset_path),
                                         registry, hw,
                                         SyntheticKernelGround::load(ground_path),
                                         params);
            if (!out_path.empty()) write_eval_csv(report, out_path);
            std::cout << eval_summary(report);
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
