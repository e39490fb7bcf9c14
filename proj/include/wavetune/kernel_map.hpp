#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace wavetune {

using i64 = std::int64_t;

inline i64 ceil_div(i64 a, i64 b) { return (a + b - 1) / b; }

enum class KernelFamily { DenseGemm, GroupedGemm, FlashAttention };

const char* family_name(KernelFamily f);
KernelFamily family_from_name(std::string_view name);

// ---- Workloads -------------------------------------------------------------

struct DenseGemm {
    i64 m, n, k;
};

struct GroupedGemm {
    std::vector<i64> group_rows;  // tokens per expert; entries may be 0
    i64 n, k;
};

struct FlashAttention {
    i64 n_heads, s_q, s_kv;
};

using KernelWorkload = std::variant<DenseGemm, GroupedGemm, FlashAttention>;

KernelFamily family_of(const KernelWorkload& x);
std::string workload_to_string(const KernelWorkload& x);
KernelWorkload workload_from_string(std::string_view text);

// ---- Configurations --------------------------------------------------------

struct GemmTiles {
    i64 t_m, t_n, t_k;
};

struct AttnTiles {
    i64 t_q, t_kv;
};

struct MacroConfig {
    int id = 0;
    std::variant<GemmTiles, AttnTiles> tiles;
};

struct MicroConfig {
    int id = 0;
    i64 n_stages = 1;
    i64 n_warps = 1;
    std::vector<std::pair<std::string, i64>> extra;
};

struct HardwareSpec {
    int n_sm = 1;
    int blocks_per_sm = 1;
    std::string name;

    int slots() const { return n_sm * blocks_per_sm; }
};

struct PhysicalCoords {
    i64 g = 0;
    i64 l = 0;
    int w = 0;
};

struct ConfigRegistry {
    KernelFamily family = KernelFamily::DenseGemm;
    std::vector<MacroConfig> macros;
    std::vector<MicroConfig> micros;
    std::set<std::pair<int, int>> feasible;  // (macro_id, micro_id)

    const MacroConfig& macro(int id) const;
    const MicroConfig& micro(int id) const;
    std::vector<int> feasible_micros(int macro_id) const;
    void validate() const;

    static ConfigRegistry load(const std::string& path);
    void save(const std::string& path) const;
};

// ---- Mapping Phi: workload -> (G, L) ---------------------------------------

std::pair<i64, i64> map_workload(const KernelWorkload& x, const MacroConfig& c);

int wave_count(i64 g, const HardwareSpec& hw);

PhysicalCoords physical_coords(const KernelWorkload& x, const MacroConfig& c,
                               const HardwareSpec& hw);

// Inverse mapping used by the profiler: build a workload whose map_workload
// under `c` lands exactly on the requested coordinates.
struct GridFactoring {
    i64 m_g, n_g;
};

KernelWorkload instantiate_workload(GridFactoring f, i64 l, const MacroConfig& c);
KernelWorkload instantiate_workload_attention(i64 g, i64 l, const MacroConfig& c,
                                              i64 n_heads);

}  // namespace wavetune
