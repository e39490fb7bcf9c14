#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wavetune/kernel_map.hpp"
#include "wavetune/wave_sim.hpp"

namespace wavetune {

struct GridPoint {
    int w = 0;  // wave index, 1-based
    int i = 0;  // sub-interval index, 1-based
    i64 g = 0;
    std::optional<GridFactoring> factoring;  // GEMM families only
};

struct SamplingPlan {
    KernelFamily family = KernelFamily::DenseGemm;
    HardwareSpec hw;
    int W = 1;
    int I = 1;
    double tau = 1.1;
    std::optional<i64> n_heads;
    std::vector<i64> loop_anchors;
    std::vector<GridPoint> grid_points;

    static SamplingPlan load(const std::string& path);
    void save(const std::string& path) const;
};

struct PlanParams {
    int W = 1;
    int I = 1;
    double tau = 1.1;
    std::vector<i64> loop_anchors;
    std::optional<i64> n_heads;
};

// Pick the profiling grid size for one sub-interval [a, b]. GEMM: largest g
// admitting a factoring m*n with m <= n <= tau*m, squarest factoring wins.
// Attention: floor(b/n_heads)*n_heads if it stays >= a. Absence is a value.
std::optional<GridPoint> select_grid_point(i64 a, i64 b, KernelFamily family,
                                           double tau,
                                           std::optional<i64> n_heads = {});

// Wave-aligned sampling plan: W regions of hw.slots() grid sizes, each split
// into I sub-intervals (earlier sub-intervals take the remainder units).
// Sub-intervals with no admissible grid size are dropped and logged.
SamplingPlan build_plan(const HardwareSpec& hw, KernelFamily family,
                        const PlanParams& params);

struct ProfileRecord {
    i64 g = 0;
    i64 l = 0;
    int w = 0;
    int macro_id = 0;
    int micro_id = 0;
    double latency_us = 0.0;
};

// Interchange CSV: header "g,l,w,macro_id,micro_id,latency_us".
void write_records(const std::vector<ProfileRecord>& records,
                   const std::string& path);
std::vector<ProfileRecord> read_records(const std::string& path);

class MeasurementBackend {
public:
    virtual ~MeasurementBackend() = default;
    virtual double measure(const KernelWorkload& x, const MacroConfig& macro,
                           const MicroConfig& micro) = 0;
    virtual bool concurrency_safe() const { return false; }
};

class SimulatorBackend : public MeasurementBackend {
public:
    SimulatorBackend(HardwareSpec hw, SyntheticKernelGround ground, double sigma,
                     std::uint64_t seed, int warmup = 3, int measured = 5);

    double measure(const KernelWorkload& x, const MacroConfig& macro,
                   const MicroConfig& micro) override;
    bool concurrency_safe() const override { return true; }

private:
    HardwareSpec hw_;
    SyntheticKernelGround ground_;
    BlockLatencyModel blm_;
    std::uint64_t seed_;
    int warmup_;
    int measured_;
};

// Serves latencies verbatim from an ingested ProfileRecord dataset; a miss is
// an error, never an approximation.
class CsvReplayBackend : public MeasurementBackend {
public:
    explicit CsvReplayBackend(const std::vector<ProfileRecord>& records);
    static CsvReplayBackend from_file(const std::string& path);

    double measure(const KernelWorkload& x, const MacroConfig& macro,
                   const MicroConfig& micro) override;
    bool concurrency_safe() const override { return true; }

private:
    std::map<std::tuple<i64, i64, int, int>, double> table_;
};

// Invokes a user-supplied executable per measurement:
//   <command> <family> <workload-fields...> <macro params...> <micro params...>
// and parses exactly one decimal number (microseconds) from its stdout.
class ExternalCommandBackend : public MeasurementBackend {
public:
    explicit ExternalCommandBackend(std::string command);

    double measure(const KernelWorkload& x, const MacroConfig& macro,
                   const MicroConfig& micro) override;

private:
    std::string command_;
};

// Runs the full sparse sweep: every (grid point, loop anchor, macro, feasible
// micro) tuple in deterministic (w, i, l, macro_id, micro_id) order. Backend
// failures skip the tuple with a log line; >10% failures abort the run.
std::vector<ProfileRecord> run_profile(const SamplingPlan& plan,
                                       const ConfigRegistry& registry,
                                       MeasurementBackend& backend);

}  // namespace wavetune
