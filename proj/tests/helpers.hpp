#pragma once

#include <cmath>
#include <vector>

#include "wavetune/kernel_map.hpp"
#include "wavetune/wave_sim.hpp"

namespace wavetune::testing {

// Small GEMM registry: tile geometries spanning small to large, micro configs
// varying pipeline depth and warps. All pairs feasible unless pruned.
inline ConfigRegistry small_gemm_registry(int n_macros = 3, int n_micros = 4) {
    ConfigRegistry r;
    r.family = KernelFamily::DenseGemm;
    const i64 tile_m[] = {64, 128, 128, 256, 64, 256};
    const i64 tile_n[] = {64, 64, 128, 128, 128, 256};
    for (int i = 0; i < n_macros; ++i) {
        MacroConfig m;
        m.id = i;
        m.tiles = GemmTiles{tile_m[i % 6], tile_n[i % 6], 64};
        r.macros.push_back(m);
    }
    for (int i = 0; i < n_micros; ++i) {
        MicroConfig u;
        u.id = i;
        u.n_stages = 2 + i % 4;
        u.n_warps = 4 + 4 * (i / 4);
        r.micros.push_back(u);
    }
    for (int ma = 0; ma < n_macros; ++ma)
        for (int mi = 0; mi < n_micros; ++mi) r.feasible.emplace(ma, mi);
    return r;
}

// Ground truth where block cost scales with tile area: large tiles pay a
// bigger fixed cost but amortize better per element (sub-linear per_iter
// growth), giving a two-regime landscape over workload size. Micro configs
// trade base against per_iter so the best micro shifts with l.
inline SyntheticKernelGround two_regime_ground(const ConfigRegistry& registry) {
    SyntheticKernelGround ground;
    for (const auto& [macro_id, micro_id] : registry.feasible) {
        const auto& tiles = std::get<GemmTiles>(registry.macro(macro_id).tiles);
        double area = static_cast<double>(tiles.t_m * tiles.t_n) / 4096.0;
        double base = 20.0 * area;
        double per_iter = 2.0 * std::pow(area, 0.85);
        // micro effect: higher ids are leaner on per-iteration cost but pay
        // more fixed cost, so the optimum moves with l
        double k = static_cast<double>(micro_id);
        GroundEntry e;
        e.base = base * (1.0 + 0.08 * k);
        e.per_iter = per_iter * (1.0 - 0.05 * k);
        ground.entries[{macro_id, micro_id}] = e;
    }
    return ground;
}

// Uniform ground truth: one (base, per_iter) for every pair.
inline SyntheticKernelGround uniform_ground(const ConfigRegistry& registry,
                                            double base, double per_iter) {
    SyntheticKernelGround ground;
    for (const auto& pair : registry.feasible)
        ground.entries[pair] = GroundEntry{base, per_iter, 0.0};
    return ground;
}

}  // namespace wavetune::testing
