#include <doctest.h>

#include <cmath>

#include "wavetune/tuner.hpp"
#include "wavetune/profiler.hpp"
#include "helpers.hpp"

using namespace wavetune;

namespace {

// End-to-end profile+fit over the simulator, shared by several cases.
struct Fixture {
    HardwareSpec hw{132, 1, "sim"};
    ConfigRegistry registry;
    SyntheticKernelGround ground;
    std::vector<ProfileRecord> records;
    std::vector<DualTable> tables;

    Fixture(int n_macros = 3, int n_micros = 4, double sigma = 0.0, int W = 6) {
        registry = testing::small_gemm_registry(n_macros, n_micros);
        ground = testing::two_regime_ground(registry);
        SamplingPlan plan = build_plan(hw, KernelFamily::DenseGemm,
                                       {W, 4, 1.5, {8, 16, 32, 48, 64}, {}});
        SimulatorBackend backend(hw, ground, sigma, 11);
        records = run_profile(plan, registry, backend);
        tables = build_dual_table(records, registry, hw, {W, 4});
    }
};

}  // namespace

TEST_CASE("nearest_anchor") {
    int comps = 0;
    CHECK(nearest_anchor({16, 32, 64}, 40, &comps) == 32);
    CHECK(comps <= static_cast<int>(std::ceil(std::log2(3))) + 1);
    CHECK(nearest_anchor({32, 64}, 48) == 32);  // tie to the smaller anchor
    CHECK(nearest_anchor({32, 64}, 5) == 32);
    CHECK(nearest_anchor({32, 64}, 500) == 64);
    CHECK(nearest_anchor({7}, 1000) == 7);
    CHECK_THROWS(nearest_anchor({}, 1));

    SUBCASE("comparison budget holds for larger anchor sets") {
        std::vector<i64> anchors;
        for (i64 a = 1; a <= 33; ++a) anchors.push_back(a * 10);
        for (i64 l : {1, 55, 166, 329, 400}) {
            int c = 0;
            i64 got = nearest_anchor(anchors, l, &c);
            CHECK(c <= static_cast<int>(std::ceil(std::log2(33.0))) + 1);
            // exhaustive re-check
            i64 best = anchors[0];
            for (i64 a : anchors)
                if (std::llabs(l - a) < std::llabs(l - best)) best = a;
            CHECK(std::llabs(l - got) == std::llabs(l - best));
        }
    }
}

TEST_CASE("predict_latency regime switch at the profiled horizon") {
    Fixture fx(1, 1, 0.0, 4);
    const DualTable& table = fx.tables[0];
    REQUIRE(table.W == 4);
    auto [lat_in, regime_in] = predict_latency(table, 4 * 132, 16, fx.hw);
    CHECK(!regime_in.extrapolated);
    CHECK(regime_in.w == 4);
    auto [lat_out, regime_out] = predict_latency(table, 4 * 132 + 1, 16, fx.hw);
    CHECK(regime_out.extrapolated);

    SUBCASE("missing wave falls back to the nearest fitted one") {
        DualTable sparse = table;
        sparse.coeff_table.erase(2);
        std::vector<std::string> flags;
        auto [lat, regime] = predict_latency(sparse, 200, 16, fx.hw, &flags);
        CHECK(!regime.extrapolated);
        REQUIRE(flags.size() == 1);
        CHECK(flags[0] == "missing_wave_2_used_1");
        CHECK(lat == sparse.coeff_table.at(1).predict(200, 16));
    }
}

TEST_CASE("tune argmin, purity, and decision stats") {
    Fixture fx;
    KernelWorkload x = DenseGemm{2000, 2000, 2048};
    Tuned t = tune(x, fx.tables, fx.registry, fx.hw);

    CHECK(t.stats.model_evals == static_cast<int>(fx.registry.macros.size()));
    CHECK(t.stats.anchor_comparisons <=
          static_cast<int>(std::ceil(std::log2(5.0))) + 1);

    SUBCASE("identical inputs give identical decisions") {
        Tuned again = tune(x, fx.tables, fx.registry, fx.hw);
        CHECK(again.macro_id == t.macro_id);
        CHECK(again.micro_id == t.micro_id);
        CHECK(again.predicted_latency_us == t.predicted_latency_us);
    }
    SUBCASE("winner attains the minimum prediction over all candidates") {
        for (const auto& table : fx.tables) {
            auto [g, l] = map_workload(x, fx.registry.macro(table.macro_id));
            auto [lat, regime] = predict_latency(table, g, l, fx.hw);
            CHECK(t.predicted_latency_us <= lat + 1e-12);
        }
    }
    SUBCASE("regime consistency") {
        auto [g, l] = map_workload(x, fx.registry.macro(t.macro_id));
        CHECK(t.regime.extrapolated == (wave_count(g, fx.hw) > fx.tables[0].W));
    }
    SUBCASE("chosen micro is feasible for the chosen macro") {
        CHECK(fx.registry.feasible.count({t.macro_id, t.micro_id}) == 1);
    }
}

TEST_CASE("tune on sigma=0 ground truth agrees with the oracle") {
    Fixture fx(3, 4, 0.0, 8);
    for (const auto& x : std::vector<KernelWorkload>{
             DenseGemm{500, 500, 1024}, DenseGemm{3000, 3000, 2048},
             DenseGemm{7000, 4000, 4096}}) {
        Tuned t = tune(x, fx.tables, fx.registry, fx.hw);
        SimMachine m{fx.hw, 3};
        OracleResult best = oracle_best(m, x, fx.registry, fx.ground, 0.0, 1);
        // Exact-model regime: the tuner's macro must match the oracle's, and
        // the measured latency of the tuned config must be near-optimal.
        BlockLatencyModel blm = fx.ground.latency_model(0.0);
        auto [g_t, l_t] = map_workload(x, fx.registry.macro(t.macro_id));
        double tuned_latency =
            simulate(m, g_t, l_t, blm, t.macro_id, t.micro_id);
        CHECK(tuned_latency / best.latency_us <= 1.05);
    }
}

TEST_CASE("baseline predictors") {
    SUBCASE("step arithmetic") {
        BaselinePredictor bp;
        bp.kind = BaselinePredictor::Kind::Step;
        bp.step.t_wave[{0, 16}] = 50.0;
        CHECK(baseline_predict(bp, 0, 10, 16, {4, 1, ""}) == 150.0);
    }
    SUBCASE("global linear arithmetic") {
        BaselinePredictor bp;
        bp.kind = BaselinePredictor::Kind::GlobalLinear;
        bp.linear.theta[0] = {0.01, 0.5, 0.2, 10.0};
        CHECK(baseline_predict(bp, 0, 100, 50, {4, 1, ""}) ==
              doctest::Approx(120.0));
    }
    SUBCASE("step recovers per-wave cost from step-law records") {
        std::vector<ProfileRecord> records;
        for (int w = 1; w <= 5; ++w)
            records.push_back({w * 100, 16, w, 0, 0, 50.0 * w});
        BaselinePredictor bp = fit_step_baseline(records);
        CHECK(bp.step.t_wave.at({0, 16}) == doctest::Approx(50.0));
    }
    SUBCASE("linear recovers a global bilinear law") {
        std::vector<ProfileRecord> records;
        for (int w = 1; w <= 5; ++w)
            for (i64 l : {8, 16})
                for (i64 g : {w * 100 - 60, w * 100 - 20})
                    records.push_back(
                        {g, l, w, 0, 0, 0.01 * g * l + 0.5 * g + 0.2 * l + 10});
        BaselinePredictor bp = fit_linear_baseline(records);
        CHECK(bp.linear.theta.at(0).alpha == doctest::Approx(0.01).epsilon(1e-9));
        CHECK(baseline_predict(bp, 0, 100, 50, {132, 1, ""}) ==
              doctest::Approx(120.0).epsilon(1e-9));
    }
}

TEST_CASE("baseline_tune uses the same two-stage shape") {
    Fixture fx;
    BaselinePredictor step = fit_step_baseline(fx.records);
    KernelWorkload x = DenseGemm{1500, 1500, 1024};
    Tuned t = baseline_tune(x, step, fx.tables, fx.registry, fx.hw);
    CHECK(t.stats.model_evals == static_cast<int>(fx.registry.macros.size()));
    CHECK(fx.registry.feasible.count({t.macro_id, t.micro_id}) == 1);
}
