#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wavetune/eval.hpp"
#include "wavetune/kernel_map.hpp"
#include "wavetune/model.hpp"
#include "wavetune/profiler.hpp"
#include "wavetune/tuner.hpp"
#include "wavetune/wave_sim.hpp"

namespace py = pybind11;
using namespace wavetune;

PYBIND11_MODULE(_core, m) {
    m.doc() = "wave-aware GPU kernel auto-tuning core";

    // Workloads
    py::class_<DenseGemm>(m, "DenseGemm")
        .def(py::init<i64, i64, i64>(), py::arg("m"), py::arg("n"), py::arg("k"))
        .def_readwrite("m", &DenseGemm::m)
        .def_readwrite("n", &DenseGemm::n)
        .def_readwrite("k", &DenseGemm::k);
    py::class_<GroupedGemm>(m, "GroupedGemm")
        .def(py::init<std::vector<i64>, i64, i64>(), py::arg("group_rows"),
             py::arg("n"), py::arg("k"))
        .def_readwrite("group_rows", &GroupedGemm::group_rows)
        .def_readwrite("n", &GroupedGemm::n)
        .def_readwrite("k", &GroupedGemm::k);
    py::class_<FlashAttention>(m, "FlashAttention")
        .def(py::init<i64, i64, i64>(), py::arg("n_heads"), py::arg("s_q"),
             py::arg("s_kv"))
        .def_readwrite("n_heads", &FlashAttention::n_heads)
        .def_readwrite("s_q", &FlashAttention::s_q)
        .def_readwrite("s_kv", &FlashAttention::s_kv);

    m.def("parse_workload", &workload_from_string, py::arg("text"));
    m.def("workload_to_string", &workload_to_string, py::arg("workload"));

    // Configs and hardware
    py::class_<GemmTiles>(m, "GemmTiles")
        .def(py::init<i64, i64, i64>(), py::arg("t_m"), py::arg("t_n"),
             py::arg("t_k"))
        .def_readwrite("t_m", &GemmTiles::t_m)
        .def_readwrite("t_n", &GemmTiles::t_n)
        .def_readwrite("t_k", &GemmTiles::t_k);
    py::class_<AttnTiles>(m, "AttnTiles")
        .def(py::init<i64, i64>(), py::arg("t_q"), py::arg("t_kv"))
        .def_readwrite("t_q", &AttnTiles::t_q)
        .def_readwrite("t_kv", &AttnTiles::t_kv);
    py::class_<MacroConfig>(m, "MacroConfig")
        .def(py::init([](int id, std::variant<GemmTiles, AttnTiles> tiles) {
                 return MacroConfig{id, tiles};
             }),
             py::arg("id"), py::arg("tiles"))
        .def_readwrite("id", &MacroConfig::id)
        .def_readwrite("tiles", &MacroConfig::tiles);
    py::class_<MicroConfig>(m, "MicroConfig")
        .def(py::init([](int id, i64 n_stages, i64 n_warps) {
                 return MicroConfig{id, n_stages, n_warps, {}};
             }),
             py::arg("id"), py::arg("n_stages"), py::arg("n_warps"))
        .def_readwrite("id", &MicroConfig::id)
        .def_readwrite("n_stages", &MicroConfig::n_stages)
        .def_readwrite("n_warps", &MicroConfig::n_warps);
    py::class_<HardwareSpec>(m, "HardwareSpec")
        .def(py::init([](int n_sm, int blocks_per_sm, std::string name) {
                 return HardwareSpec{n_sm, blocks_per_sm, std::move(name)};
             }),
             py::arg("n_sm"), py::arg("blocks_per_sm") = 1, py::arg("name") = "")
        .def_readwrite("n_sm", &HardwareSpec::n_sm)
        .def_readwrite("blocks_per_sm", &HardwareSpec::blocks_per_sm)
        .def_readwrite("name", &HardwareSpec::name);

    py::class_<ConfigRegistry>(m, "ConfigRegistry")
        .def(py::init<>())
        .def_property(
            "family",
            [](const ConfigRegistry& r) { return std::string(family_name(r.family)); },
            [](ConfigRegistry& r, const std::string& f) {
                r.family = family_from_name(f);
            })
        .def_readwrite("macros", &ConfigRegistry::macros)
        .def_readwrite("micros", &ConfigRegistry::micros)
        .def("add_feasible",
             [](ConfigRegistry& r, int ma, int mi) { r.feasible.emplace(ma, mi); })
        .def("feasible_micros", &ConfigRegistry::feasible_micros)
        .def("validate", &ConfigRegistry::validate)
        .def_static("load", &ConfigRegistry::load)
        .def("save", &ConfigRegistry::save);

    m.def("map_workload", &map_workload, py::arg("workload"), py::arg("macro"));
    m.def("wave_count", &wave_count, py::arg("g"), py::arg("hw"));
    m.def(
        "instantiate_workload",
        [](i64 m_g, i64 n_g, i64 l, const MacroConfig& c) {
            return instantiate_workload({m_g, n_g}, l, c);
        },
        py::arg("m_g"), py::arg("n_g"), py::arg("l"), py::arg("macro"));

    // Simulator
    py::class_<GroundEntry>(m, "GroundEntry")
        .def(py::init([](double base, double per_iter, double gap) {
                 return GroundEntry{base, per_iter, gap};
             }),
             py::arg("base"), py::arg("per_iter"), py::arg("dispatch_gap") = 0.0)
        .def_readwrite("base", &GroundEntry::base)
        .def_readwrite("per_iter", &GroundEntry::per_iter);
    py::class_<SyntheticKernelGround>(m, "SyntheticKernelGround")
        .def(py::init<>())
        .def("set_entry",
             [](SyntheticKernelGround& g, int ma, int mi, const GroundEntry& e) {
                 g.entries[{ma, mi}] = e;
             })
        .def("mean", &SyntheticKernelGround::mean)
        .def_static("load", &SyntheticKernelGround::load)
        .def("save", &SyntheticKernelGround::save);

    m.def(
        "simulate",
        [](const HardwareSpec& hw, i64 g, i64 l, double mu, double sigma,
           std::uint64_t seed) {
            return simulate(SimMachine{hw, seed}, g, l,
                            BlockLatencyModel::constant(mu, sigma));
        },
        py::arg("hw"), py::arg("g"), py::arg("l"), py::arg("mu"),
        py::arg("sigma") = 0.0, py::arg("seed") = 0,
        "makespan of g blocks with Normal(mu, sigma) durations");

    // Profiling
    py::class_<ProfileRecord>(m, "ProfileRecord")
        .def_readonly("g", &ProfileRecord::g)
        .def_readonly("l", &ProfileRecord::l)
        .def_readonly("w", &ProfileRecord::w)
        .def_readonly("macro_id", &ProfileRecord::macro_id)
        .def_readonly("micro_id", &ProfileRecord::micro_id)
        .def_readonly("latency_us", &ProfileRecord::latency_us);
    py::class_<GridPoint>(m, "GridPoint")
        .def_readonly("w", &GridPoint::w)
        .def_readonly("i", &GridPoint::i)
        .def_readonly("g", &GridPoint::g);
    py::class_<SamplingPlan>(m, "SamplingPlan")
        .def_readonly("W", &SamplingPlan::W)
        .def_readonly("I", &SamplingPlan::I)
        .def_readonly("loop_anchors", &SamplingPlan::loop_anchors)
        .def_readonly("grid_points", &SamplingPlan::grid_points)
        .def_static("load", &SamplingPlan::load)
        .def("save", &SamplingPlan::save);

    m.def(
        "build_plan",
        [](const HardwareSpec& hw, const std::string& family, int W, int I,
           double tau, std::vector<i64> anchors, std::optional<i64> n_heads) {
            PlanParams params;
            params.W = W;
            params.I = I;
            params.tau = tau;
            params.loop_anchors = std::move(anchors);
            params.n_heads = n_heads;
            return build_plan(hw, family_from_name(family), params);
        },
        py::arg("hw"), py::arg("family"), py::arg("W"), py::arg("I"),
        py::arg("tau"), py::arg("loop_anchors"), py::arg("n_heads") = std::nullopt);

    m.def(
        "run_profile_sim",
        [](const SamplingPlan& plan, const ConfigRegistry& registry,
           const SyntheticKernelGround& ground, double sigma,
           std::uint64_t seed) {
            SimulatorBackend backend(plan.hw, ground, sigma, seed);
            return run_profile(plan, registry, backend);
        },
        py::arg("plan"), py::arg("registry"), py::arg("ground"),
        py::arg("sigma") = 0.0, py::arg("seed") = 0);
    m.def("write_records", &write_records);
    m.def("read_records", &read_records);

    // Modeling
    py::class_<BilinearCoeffs>(m, "BilinearCoeffs")
        .def_readonly("alpha", &BilinearCoeffs::alpha)
        .def_readonly("beta", &BilinearCoeffs::beta)
        .def_readonly("gamma", &BilinearCoeffs::gamma)
        .def_readonly("delta", &BilinearCoeffs::delta)
        .def("predict", &BilinearCoeffs::predict);
    py::class_<DualTable>(m, "DualTable")
        .def_readonly("macro_id", &DualTable::macro_id)
        .def_readonly("W", &DualTable::W)
        .def_readonly("coeff_table", &DualTable::coeff_table)
        .def_readonly("theta_ext", &DualTable::theta_ext);
    py::class_<TableArtifact>(m, "TableArtifact")
        .def_readonly("tables", &TableArtifact::tables);

    m.def(
        "build_tables",
        [](const std::vector<ProfileRecord>& records,
           const ConfigRegistry& registry, const HardwareSpec& hw, int W, int p) {
            TableArtifact artifact;
            artifact.family = registry.family;
            artifact.tables = build_dual_table(records, registry, hw, {W, p});
            return artifact;
        },
        py::arg("records"), py::arg("registry"), py::arg("hw"), py::arg("W") = 0,
        py::arg("p") = 10);
    m.def("save_tables", &save_tables);
    m.def("load_tables", &load_tables);

    // Tuning
    py::class_<DecisionStats>(m, "DecisionStats")
        .def_readonly("model_evals", &DecisionStats::model_evals)
        .def_readonly("anchor_comparisons", &DecisionStats::anchor_comparisons);
    py::class_<Regime>(m, "Regime")
        .def_readonly("extrapolated", &Regime::extrapolated)
        .def_readonly("w", &Regime::w);
    py::class_<Tuned>(m, "Tuned")
        .def_readonly("macro_id", &Tuned::macro_id)
        .def_readonly("micro_id", &Tuned::micro_id)
        .def_readonly("predicted_latency_us", &Tuned::predicted_latency_us)
        .def_readonly("g", &Tuned::g)
        .def_readonly("l", &Tuned::l)
        .def_readonly("regime", &Tuned::regime)
        .def_readonly("stats", &Tuned::stats);

    m.def(
        "tune",
        [](const KernelWorkload& x, const TableArtifact& artifact,
           const ConfigRegistry& registry, const HardwareSpec& hw) {
            return tune(x, artifact.tables, registry, hw);
        },
        py::arg("workload"), py::arg("tables"), py::arg("registry"),
        py::arg("hw"));
    m.def(
        "predict_latency",
        [](const DualTable& table, i64 g, i64 l, const HardwareSpec& hw) {
            auto [latency, regime] = predict_latency(table, g, l, hw);
            return py::make_tuple(latency, regime);
        },
        py::arg("table"), py::arg("g"), py::arg("l"), py::arg("hw"));
}
