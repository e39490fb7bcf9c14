#include "wavetune/profiler.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "wavetune/rng.hpp"

namespace wavetune {

using nlohmann::json;

// ---- Plan construction -----------------------------------------------------

std::optional<GridPoint> select_grid_point(i64 a, i64 b, KernelFamily family,
                                           double tau,
                                           std::optional<i64> n_heads) {
    if (a < 1 || a > b) throw std::invalid_argument("invalid interval");
    if (family == KernelFamily::FlashAttention) {
        if (!n_heads || *n_heads < 1)
            throw std::invalid_argument("attention plans require n_heads");
        i64 g = (b / *n_heads) * *n_heads;
        if (g < a) return std::nullopt;
        GridPoint p;
        p.g = g;
        return p;
    }
    // GEMM: largest g in [a, b] with a factoring m*n, m <= n, n/m <= tau.
    // Scanning m downward from floor(sqrt(g)) yields the squarest pair first.
    for (i64 g = b; g >= a; --g) {
        i64 root = static_cast<i64>(std::sqrt(static_cast<double>(g))) + 1;
        while (root * root > g) --root;
        for (i64 m = root; m >= 1; --m) {
            if (g % m != 0) continue;
            i64 n = g / m;
            if (n < m) continue;
            if (static_cast<double>(n) <= tau * static_cast<double>(m)) {
                GridPoint p;
                p.g = g;
                p.factoring = GridFactoring{m, n};
                return p;
            }
            break;  // larger ratios only from here down
        }
    }
    return std::nullopt;
}

SamplingPlan build_plan(const HardwareSpec& hw, KernelFamily family,
                        const PlanParams& params) {
    if (params.W < 1 || params.I < 1)
        throw std::invalid_argument("W and I must be >= 1");
    if (params.tau <= 1.0) throw std::invalid_argument("tau must be > 1");
    if (params.loop_anchors.empty())
        throw std::invalid_argument("loop_anchors must be non-empty");
    if (family == KernelFamily::FlashAttention &&
        (!params.n_heads || *params.n_heads < 1))
        throw std::invalid_argument("attention plans require n_heads");

    SamplingPlan plan;
    plan.family = family;
    plan.hw = hw;
    plan.W = params.W;
    plan.I = params.I;
    plan.tau = params.tau;
    plan.n_heads = params.n_heads;
    plan.loop_anchors = params.loop_anchors;
    std::sort(plan.loop_anchors.begin(), plan.loop_anchors.end());

    const i64 span = hw.slots();
    const i64 width = span / params.I;
    const i64 rem = span % params.I;
    for (int w = 1; w <= params.W; ++w) {
        i64 a = static_cast<i64>(w - 1) * span + 1;
        for (int i = 1; i <= params.I; ++i) {
            i64 len = width + (i <= rem ? 1 : 0);
            i64 b = a + len - 1;
            auto point = select_grid_point(a, b, family, params.tau, params.n_heads);
            if (point) {
                point->w = w;
                point->i = i;
                plan.grid_points.push_back(*point);
            } else {
                std::cerr << "plan: no admissible grid size in [" << a << ", " << b
                          << "] (w=" << w << ", i=" << i << "), dropped\n";
            }
            a = b + 1;
        }
    }
    return plan;
}

void SamplingPlan::save(const std::string& path) const {
    json j;
    j["version"] = 1;
    j["family"] = family_name(family);
    j["n_sm"] = hw.n_sm;
    j["blocks_per_sm"] = hw.blocks_per_sm;
    j["hardware"] = hw.name;
    j["W"] = W;
    j["I"] = I;
    j["tau"] = tau;
    if (n_heads) j["n_heads"] = *n_heads;
    j["loop_anchors"] = loop_anchors;
    j["grid_points"] = json::array();
    for (const auto& p : grid_points) {
        json jp{{"w", p.w}, {"i", p.i}, {"g", p.g}};
        if (p.factoring) {
            jp["m_g"] = p.factoring->m_g;
            jp["n_g"] = p.factoring->n_g;
        }
        j["grid_points"].push_back(jp);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write plan file: " + path);
    out << j.dump(2) << "\n";
}

SamplingPlan SamplingPlan::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open plan file: " + path);
    json j;
    in >> j;
    if (j.value("version", 0) != 1)
        throw std::invalid_argument("plan version mismatch: expected 1, found " +
                                    j.value("version", json(0)).dump());
    SamplingPlan plan;
    plan.family = family_from_name(j.at("family").get<std::string>());
    plan.hw.n_sm = j.at("n_sm").get<int>();
    plan.hw.blocks_per_sm = j.value("blocks_per_sm", 1);
    plan.hw.name = j.value("hardware", "");
    plan.W = j.at("W").get<int>();
    plan.I = j.at("I").get<int>();
    plan.tau = j.at("tau").get<double>();
    if (j.contains("n_heads")) plan.n_heads = j.at("n_heads").get<i64>();
    plan.loop_anchors = j.at("loop_anchors").get<std::vector<i64>>();
    for (const auto& jp : j.at("grid_points")) {
        GridPoint p;
        p.w = jp.at("w").get<int>();
        p.i = jp.at("i").get<int>();
        p.g = jp.at("g").get<i64>();
        if (jp.contains("m_g"))
            p.factoring = GridFactoring{jp.at("m_g").get<i64>(), jp.at("n_g").get<i64>()};
        plan.grid_points.push_back(p);
    }
    return plan;
}

// ---- Record CSV ------------------------------------------------------------

void write_records(const std::vector<ProfileRecord>& records,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    out << "g,l,w,macro_id,micro_id,latency_us\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g", r.latency_us);
        out << r.g << ',' << r.l << ',' << r.w << ',' << r.macro_id << ','
            << r.micro_id << ',' << buf << '\n';
    }
}

std::vector<ProfileRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "g,l,w,macro_id,micro_id,latency_us")
        throw std::runtime_error("bad dataset header in " + path);
    std::vector<ProfileRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ProfileRecord r;
        std::istringstream row(line);
        char comma;
        if (!(row >> r.g >> comma >> r.l >> comma >> r.w >> comma >> r.macro_id >>
              comma >> r.micro_id >> comma >> r.latency_us))
            throw std::runtime_error("malformed dataset row: " + line);
        if (r.latency_us <= 0)
            throw std::runtime_error("non-positive latency in dataset row: " + line);
        records.push_back(r);
    }
    return records;
}

// ---- Backends --------------------------------------------------------------

SimulatorBackend::SimulatorBackend(HardwareSpec hw, SyntheticKernelGround ground,
                                   double sigma, std::uint64_t seed, int warmup,
                                   int measured)
    : hw_(std::move(hw)),
      ground_(std::move(ground)),
      seed_(seed),
      warmup_(warmup),
      measured_(measured) {
    if (measured_ < 1) throw std::invalid_argument("measured iterations must be >= 1");
    blm_ = ground_.latency_model(sigma);
}

double SimulatorBackend::measure(const KernelWorkload& x, const MacroConfig& macro,
                                 const MicroConfig& micro) {
    auto [g, l] = map_workload(x, macro);
    double total = 0.0;
    for (int iter = 0; iter < warmup_ + measured_; ++iter) {
        SimMachine machine{hw_, mix_seed(seed_, static_cast<std::uint64_t>(g),
                                         mix_seed(static_cast<std::uint64_t>(l),
                                                  static_cast<std::uint64_t>(macro.id),
                                                  static_cast<std::uint64_t>(micro.id)),
                                         static_cast<std::uint64_t>(iter))};
        double latency = simulate(machine, g, l, blm_, macro.id, micro.id);
        if (iter >= warmup_) total += latency;
    }
    return total / measured_;
}

CsvReplayBackend::CsvReplayBackend(const std::vector<ProfileRecord>& records) {
    for (const auto& r : records)
        table_[{r.g, r.l, r.macro_id, r.micro_id}] = r.latency_us;
}

CsvReplayBackend CsvReplayBackend::from_file(const std::string& path) {
    return CsvReplayBackend(read_records(path));
}

double CsvReplayBackend::measure(const KernelWorkload& x, const MacroConfig& macro,
                                 const MicroConfig& micro) {
    auto [g, l] = map_workload(x, macro);
    auto it = table_.find({g, l, macro.id, micro.id});
    if (it == table_.end())
        throw std::runtime_error("replay dataset has no entry for g=" +
                                 std::to_string(g) + " l=" + std::to_string(l) +
                                 " macro=" + std::to_string(macro.id) +
                                 " micro=" + std::to_string(micro.id));
    return it->second;
}

ExternalCommandBackend::ExternalCommandBackend(std::string command)
    : command_(std::move(command)) {}

double ExternalCommandBackend::measure(const KernelWorkload& x,
                                       const MacroConfig& macro,
                                       const MicroConfig& micro) {
    std::ostringstream cmd;
    cmd << command_ << ' ' << family_name(family_of(x));
    if (const auto* d = std::get_if<DenseGemm>(&x))
        cmd << ' ' << d->m << ' ' << d->n << ' ' << d->k;
    else if (const auto* gg = std::get_if<GroupedGemm>(&x)) {
        cmd << ' ' << gg->n << ' ' << gg->k;
        for (i64 rows : gg->group_rows) cmd << ' ' << rows;
    } else {
        const auto& a = std::get<FlashAttention>(x);
        cmd << ' ' << a.n_heads << ' ' << a.s_q << ' ' << a.s_kv;
    }
    if (const auto* gt = std::get_if<GemmTiles>(&macro.tiles))
        cmd << ' ' << gt->t_m << ' ' << gt->t_n << ' ' << gt->t_k;
    else {
        const auto& at = std::get<AttnTiles>(macro.tiles);
        cmd << ' ' << at.t_q << ' ' << at.t_kv;
    }
    cmd << ' ' << micro.n_stages << ' ' << micro.n_warps;
    for (const auto& [name, value] : micro.extra) cmd << ' ' << value;

    FILE* pipe = popen(cmd.str().c_str(), "r");
    if (!pipe) throw std::runtime_error("failed to launch: " + cmd.str());
    char buf[256];
    std::string output;
    while (std::fgets(buf, sizeof buf, pipe)) output += buf;
    int status = pclose(pipe);
    if (status != 0)
        throw std::runtime_error("measurement command exited with status " +
                                 std::to_string(status));
    std::istringstream parse(output);
    double latency;
    if (!(parse >> latency) || latency <= 0)
        throw std::runtime_error("measurement command printed no latency: '" +
                                 output + "'");
    return latency;
}

// ---- Profiling sweep -------------------------------------------------------

std::vector<ProfileRecord> run_profile(const SamplingPlan& plan,
                                       const ConfigRegistry& registry,
                                       MeasurementBackend& backend) {
    registry.validate();
    if (registry.family != plan.family)
        throw std::invalid_argument("registry family does not match plan family");

    std::vector<MacroConfig> macros = registry.macros;
    std::sort(macros.begin(), macros.end(),
              [](const MacroConfig& a, const MacroConfig& b) { return a.id < b.id; });

    std::vector<ProfileRecord> records;
    std::size_t attempted = 0, failed = 0;
    for (const auto& point : plan.grid_points) {
        for (i64 l : plan.loop_anchors) {
            for (const auto& macro : macros) {
                KernelWorkload x =
                    plan.family == KernelFamily::FlashAttention
                        ? instantiate_workload_attention(point.g, l, macro,
                                                         *plan.n_heads)
                        : instantiate_workload(*point.factoring, l, macro);
                for (int micro_id : registry.feasible_micros(macro.id)) {
                    ++attempted;
                    try {
                        double latency =
                            backend.measure(x, macro, registry.micro(micro_id));
                        records.push_back({point.g, l, wave_count(point.g, plan.hw),
                                           macro.id, micro_id, latency});
                    } catch (const std::exception& err) {
                        ++failed;
                        std::cerr << "profile: skipped g=" << point.g << " l=" << l
                                  << " macro=" << macro.id << " micro=" << micro_id
                                  << ": " << err.what() << "\n";
                    }
                }
            }
        }
    }
    if (attempted > 0 && failed * 10 > attempted)
        throw std::runtime_error("profiling aborted: " + std::to_string(failed) +
                                 " of " + std::to_string(attempted) +
                                 " measurements failed (>10%)");
    return records;
}

}  // namespace wavetune
