#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "wavetune/rng.hpp"
#include "wavetune/wave_sim.hpp"
#include "helpers.hpp"

using namespace wavetune;

TEST_CASE("zero-variance makespan follows the step law") {
    SimMachine m{{4, 1, ""}, 42};
    CHECK(simulate(m, 10, 1, BlockLatencyModel::constant(50.0)) == 150.0);

    SimMachine h100{{132, 1, ""}, 42};
    CHECK(simulate(h100, 132, 1, BlockLatencyModel::constant(50.0)) == 50.0);

    SUBCASE("exact over a wide grid range") {
        auto blm = BlockLatencyModel::constant(50.0);
        for (i64 g = 1; g <= 400; ++g)
            CHECK(simulate(h100, g, 1, blm) == 50.0 * ceil_div(g, 132));
    }
    SUBCASE("monotone in g") {
        auto blm = BlockLatencyModel::constant(7.0);
        double prev = 0.0;
        for (i64 g = 1; g <= 300; ++g) {
            double t = simulate(h100, g, 1, blm);
            CHECK(t >= prev);
            prev = t;
        }
    }
    SUBCASE("relative step penalty shrinks as 1/w") {
        auto blm = BlockLatencyModel::constant(50.0);
        for (i64 g : {132, 1320, 13200}) {
            double t = simulate(h100, g, 1, blm);
            double linear = 50.0 * g / 132.0;
            CHECK((t - linear) / t <= 1.0 / wave_count(g, h100.hw) + 1e-12);
        }
    }
}

TEST_CASE("single full wave equals the max of per-block draws") {
    // Independent recomputation of the one-wave makespan from the same
    // per-block sampling rule.
    SimMachine m{{132, 1, ""}, 7};
    auto blm = BlockLatencyModel::constant(50.0, 20.0);
    double expected = 0.0;
    for (i64 i = 0; i < 132; ++i) {
        SplitMix64 rng(mix_seed(7, static_cast<std::uint64_t>(i)));
        expected = std::max(expected,
                            std::max(0.5, 50.0 + 20.0 * rng.next_gaussian()));
    }
    CHECK(simulate(m, 132, 1, blm) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("simulation is deterministic per seed") {
    SimMachine m{{132, 1, ""}, 123};
    auto blm = BlockLatencyModel::constant(50.0, 30.0);
    double a = simulate(m, 500, 4, blm);
    double b = simulate(m, 500, 4, blm);
    CHECK(a == b);
    SimMachine other{{132, 1, ""}, 124};
    CHECK(simulate(other, 500, 4, blm) != a);
}

TEST_CASE("desynchronized two-wave run lands between step value and max bound") {
    // Mean makespan over 100 seeds for g=264 at sigma=50: above the sigma=0
    // step value of 100, below step + E[max of 264 draws] bound.
    auto blm = BlockLatencyModel::constant(50.0, 50.0);
    double total = 0.0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        SimMachine m{{132, 1, ""}, static_cast<std::uint64_t>(s)};
        total += simulate(m, 264, 1, blm);
    }
    double mean = total / seeds;
    double max_order_bound = 50.0 * std::sqrt(2.0 * std::log(264.0));
    CHECK(mean > 100.0);
    CHECK(mean < 100.0 + max_order_bound);
}

TEST_CASE("sweep is reproducible and order-independent") {
    SimMachine m{{132, 1, ""}, 99};
    auto blm = BlockLatencyModel::constant(50.0, 25.0);
    auto full = sweep_profile(m, {10, 50, 200, 400}, 1, blm);
    auto partial = sweep_profile(m, {50, 400}, 1, blm);
    CHECK(full[1].latency_us == partial[0].latency_us);
    CHECK(full[3].latency_us == partial[1].latency_us);

    SUBCASE("zero variance sweep is the exact staircase") {
        std::vector<i64> gs;
        for (i64 g = 1; g <= 528; ++g) gs.push_back(g);
        auto points = sweep_profile(m, gs, 1, BlockLatencyModel::constant(50.0));
        for (const auto& pt : points)
            CHECK(pt.latency_us == 50.0 * ceil_div(pt.g, 132));
    }
}

TEST_CASE("dispatch gap serializes block handout") {
    BlockLatencyModel blm = BlockLatencyModel::constant(10.0);
    blm.dispatch_gap = [](int, int) { return 2.0; };
    SimMachine m{{4, 1, ""}, 0};
    // 4 blocks, gap 2: starts at 0,2,4,6 -> makespan 16.
    CHECK(simulate(m, 4, 1, blm) == 16.0);
}

TEST_CASE("oracle_best matches exhaustive re-evaluation") {
    ConfigRegistry registry = testing::small_gemm_registry(3, 4);
    SyntheticKernelGround ground = testing::two_regime_ground(registry);
    SimMachine m{{132, 1, ""}, 5};
    KernelWorkload x = DenseGemm{4096, 4096, 4096};

    OracleResult best = oracle_best(m, x, registry, ground, 2.0, 3);

    // Independent brute force over all 12 outcomes with the same seeds.
    BlockLatencyModel blm = ground.latency_model(2.0);
    double best_latency = 1e300;
    int best_macro = -1, best_micro = -1;
    for (const auto& [ma, mi] : registry.feasible) {
        auto [g, l] = map_workload(x, registry.macro(ma));
        double total = 0.0;
        for (int rep = 0; rep < 3; ++rep) {
            SimMachine sub{m.hw, mix_seed(5, static_cast<std::uint64_t>(ma),
                                          static_cast<std::uint64_t>(mi),
                                          static_cast<std::uint64_t>(rep))};
            total += simulate(sub, g, l, blm, ma, mi);
        }
        if (total / 3 < best_latency) {
            best_latency = total / 3;
            best_macro = ma;
            best_micro = mi;
        }
    }
    CHECK(best.macro_id == best_macro);
    CHECK(best.micro_id == best_micro);
    CHECK(best.latency_us == doctest::Approx(best_latency));

    SUBCASE("dominated pair is never chosen at sigma=0") {
        SyntheticKernelGround dom;
        dom.entries[{0, 0}] = {10.0, 1.0, 0.0};
        dom.entries[{0, 1}] = {12.0, 1.2, 0.0};  // strictly worse everywhere
        ConfigRegistry two = testing::small_gemm_registry(1, 2);
        OracleResult r = oracle_best(m, x, two, dom, 0.0, 1);
        CHECK(r.macro_id == 0);
        CHECK(r.micro_id == 0);
    }
    SUBCASE("singleton registry returns its only pair") {
        ConfigRegistry one = testing::small_gemm_registry(1, 1);
        OracleResult r = oracle_best(m, x, one, testing::uniform_ground(one, 5, 1),
                                     0.0, 1);
        CHECK(r.macro_id == 0);
        CHECK(r.micro_id == 0);
    }
}

TEST_CASE("ground truth file round trip") {
    ConfigRegistry registry = testing::small_gemm_registry(2, 2);
    SyntheticKernelGround ground = testing::two_regime_ground(registry);
    auto path = std::filesystem::temp_directory_path() / "wt_ground.json";
    ground.save(path.string());
    SyntheticKernelGround loaded = SyntheticKernelGround::load(path.string());
    CHECK(loaded.entries.size() == ground.entries.size());
    for (const auto& [key, e] : ground.entries) {
        CHECK(loaded.at(key.first, key.second).base == doctest::Approx(e.base));
        CHECK(loaded.at(key.first, key.second).per_iter ==
              doctest::Approx(e.per_iter));
    }
    std::filesystem::remove(path);
}
