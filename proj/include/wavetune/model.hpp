#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wavetune/kernel_map.hpp"
#include "wavetune/profiler.hpp"

namespace wavetune {

struct BilinearCoeffs {
    double alpha = 0.0;  // us per unit of G*L
    double beta = 0.0;   // us per unit of G
    double gamma = 0.0;  // us per unit of L
    double delta = 0.0;  // us

    double predict(i64 g, i64 l) const {
        double gd = static_cast<double>(g), ld = static_cast<double>(l);
        return alpha * gd * ld + beta * gd + gamma * ld + delta;
    }

    bool operator==(const BilinearCoeffs&) const = default;
};

struct FitSample {
    double g, l, latency_us;
};

struct FitResult {
    BilinearCoeffs coeffs;
    double r2 = 0.0;
    double mape = 0.0;
    bool degenerate = false;  // reduced fit: collinear columns zeroed
};

// Ordinary least squares for T ~ alpha*GL + beta*G + gamma*L + delta via a
// rank-revealing QR on a column-scaled design. Rank-deficient designs get a
// reduced fit with non-pivot coefficients set to 0.
FitResult fit_bucket(const std::vector<FitSample>& samples);

struct SharedMicroSelection {
    int micro_id = -1;
    std::vector<std::pair<i64, double>> samples;  // (g, latency) under that micro
    bool partial_coverage = false;
};

// Shared micro-config for one (macro, w, l) group: the micro minimizing the
// arithmetic mean latency over the group's grid points, ties by smallest id.
// If no micro covers every sampled g, falls back to the widest coverage.
SharedMicroSelection select_shared_micro(const std::vector<ProfileRecord>& group);

struct WaveDiagnostics {
    double r2 = 0.0;
    double mape = 0.0;
    int samples = 0;
    std::vector<std::string> flags;

    bool operator==(const WaveDiagnostics&) const = default;
};

struct DualTable {
    int macro_id = -1;
    std::string hardware;
    int W = 0;
    int p = 0;
    std::map<int, BilinearCoeffs> coeff_table;     // wave -> theta
    BilinearCoeffs theta_ext;
    std::map<int, std::map<i64, int>> anchor_table;  // wave -> (l -> micro_id)
    std::map<i64, int> ext_anchors;                  // l -> micro_id
    std::map<int, WaveDiagnostics> diagnostics;      // wave -> fit quality
    std::vector<std::string> ext_flags;

    bool operator==(const DualTable&) const = default;
};

struct ExtrapolationFit {
    BilinearCoeffs theta_ext;
    std::map<i64, int> ext_anchors;
    std::vector<std::string> flags;
};

// Pools shared-micro samples from the last p waves of [1, W] and fits one
// set of extrapolation coefficients; anchors by majority vote across waves.
ExtrapolationFit fit_extrapolation(const std::vector<ProfileRecord>& records,
                                   int W, int p);

struct TableBuildParams {
    int W = 0;  // 0: use the highest wave present in the data
    int p = 10;
};

std::vector<DualTable> build_dual_table(const std::vector<ProfileRecord>& records,
                                        const ConfigRegistry& registry,
                                        const HardwareSpec& hw,
                                        const TableBuildParams& params);

struct TableArtifact {
    KernelFamily family = KernelFamily::DenseGemm;
    std::vector<DualTable> tables;

    bool operator==(const TableArtifact&) const = default;
};

// JSON artifact with hex-float coefficients so load(save(x)) == x bit-exactly.
void save_tables(const TableArtifact& artifact, const std::string& path);
TableArtifact load_tables(const std::string& path);

}  // namespace wavetune
