#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wavetune/kernel_map.hpp"

namespace wavetune {

// Per-block duration distribution: max(eps, Normal(mean_fn(...), sigma)).
// The truncation floor defaults to mean/100 so that large sigmas cannot
// produce non-physical durations.
struct BlockLatencyModel {
    std::function<double(int macro_id, int micro_id, i64 l)> mean_fn;
    double sigma = 0.0;
    double floor_frac = 0.01;                        // eps = floor_frac * mean
    std::function<double(int, int)> dispatch_gap;    // optional, us per block

    static BlockLatencyModel constant(double mu, double sigma = 0.0);
};

// Synthetic ground truth: per (macro, micro) the mean block duration is
// base + per_iter * l, which aggregates to the bilinear surface the fitting
// pipeline targets (the GL term from per_iter, the G term from base).
struct GroundEntry {
    double base = 0.0;      // us per block
    double per_iter = 0.0;  // us per loop iteration
    double dispatch_gap = 0.0;
};

struct SyntheticKernelGround {
    std::map<std::pair<int, int>, GroundEntry> entries;

    const GroundEntry& at(int macro_id, int micro_id) const;
    double mean(int macro_id, int micro_id, i64 l) const;
    BlockLatencyModel latency_model(double sigma) const;

    static SyntheticKernelGround load(const std::string& path);
    void save(const std::string& path) const;
};

struct SimMachine {
    HardwareSpec hw;
    std::uint64_t seed = 0;
};

// Makespan of dispatching g blocks greedily over hw.slots() identical slots.
// Deterministic given the seed: block i's duration depends only on
// (seed, i), and completion ties are resolved in insertion order.
double simulate(const SimMachine& machine, i64 g, i64 l,
                const BlockLatencyModel& blm, int macro_id = 0, int micro_id = 0);

struct SweepPoint {
    i64 g;
    double latency_us;
};

// One simulate call per g, each with a sub-seed mixed from (seed, g) so the
// sweep is reproducible and order-independent.
std::vector<SweepPoint> sweep_profile(const SimMachine& machine,
                                      const std::vector<i64>& g_list, i64 l,
                                      const BlockLatencyModel& blm,
                                      int macro_id = 0, int micro_id = 0);

struct OracleResult {
    int macro_id;
    int micro_id;
    double latency_us;
};

// Exhaustive evaluation of every feasible (macro, micro) pair; argmin by mean
// latency over `reps` simulations, ties by (macro_id, micro_id).
OracleResult oracle_best(const SimMachine& machine, const KernelWorkload& x,
                         const ConfigRegistry& registry,
                         const SyntheticKernelGround& ground, double sigma,
                         int reps = 3);

}  // namespace wavetune
