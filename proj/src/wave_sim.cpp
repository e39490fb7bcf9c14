#include "wavetune/wave_sim.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <stdexcept>

#include <json.hpp>

#include "wavetune/rng.hpp"

namespace wavetune {

using nlohmann::json;

BlockLatencyModel BlockLatencyModel::constant(double mu, double sigma) {
    if (mu <= 0) throw std::invalid_argument("mean block latency must be positive");
    BlockLatencyModel blm;
    blm.mean_fn = [mu](int, int, i64) { return mu; };
    blm.sigma = sigma;
    return blm;
}

const GroundEntry& SyntheticKernelGround::at(int macro_id, int micro_id) const {
    auto it = entries.find({macro_id, micro_id});
    if (it == entries.end())
        throw std::out_of_range("no ground-truth entry for (" +
                                std::to_string(macro_id) + ", " +
                                std::to_string(micro_id) + ")");
    return it->second;
}

double SyntheticKernelGround::mean(int macro_id, int micro_id, i64 l) const {
    const GroundEntry& e = at(macro_id, micro_id);
    return e.base + e.per_iter * static_cast<double>(l);
}

BlockLatencyModel SyntheticKernelGround::latency_model(double sigma) const {
    BlockLatencyModel blm;
    blm.mean_fn = [this](int ma, int mi, i64 l) { return mean(ma, mi, l); };
    blm.dispatch_gap = [this](int ma, int mi) { return at(ma, mi).dispatch_gap; };
    blm.sigma = sigma;
    return blm;
}

SyntheticKernelGround SyntheticKernelGround::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ground-truth file: " + path);
    json j;
    in >> j;
    SyntheticKernelGround g;
    for (const auto& je : j.at("entries")) {
        GroundEntry e;
        e.base = je.at("base").get<double>();
        e.per_iter = je.at("per_iter").get<double>();
        e.dispatch_gap = je.value("dispatch_gap", 0.0);
        if (e.base <= 0 || e.per_iter < 0 || e.dispatch_gap < 0)
            throw std::invalid_argument("ground-truth costs must be positive");
        g.entries[{je.at("macro_id").get<int>(), je.at("micro_id").get<int>()}] = e;
    }
    return g;
}

void SyntheticKernelGround::save(const std::string& path) const {
    json j;
    j["entries"] = json::array();
    for (const auto& [key, e] : entries) {
        j["entries"].push_back({{"macro_id", key.first},
                                {"micro_id", key.second},
                                {"base", e.base},
                                {"per_iter", e.per_iter},
                                {"dispatch_gap", e.dispatch_gap}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write ground-truth file: " + path);
    out << j.dump(2) << "\n";
}

double simulate(const SimMachine& machine, i64 g, i64 l,
                const BlockLatencyModel& blm, int macro_id, int micro_id) {
    if (g < 1 || l < 1)
        throw std::invalid_argument("grid size and loop count must be >= 1");
    if (!blm.mean_fn) throw std::invalid_argument("latency model has no mean_fn");

    const double mean = blm.mean_fn(macro_id, micro_id, l);
    if (mean <= 0) throw std::invalid_argument("mean block duration must be positive");
    const double eps = blm.floor_frac * mean;
    const double gap = blm.dispatch_gap ? blm.dispatch_gap(macro_id, micro_id) : 0.0;
    const int slots = machine.hw.slots();

    // Min-heap of slot free times; ties resolved by insertion counter so the
    // schedule is identical on every platform.
    using Entry = std::pair<double, i64>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> free_at;
    for (int s = 0; s < slots; ++s) free_at.emplace(0.0, s);

    double next_dispatch = 0.0;
    double makespan = 0.0;
    i64 counter = slots;
    for (i64 block = 0; block < g; ++block) {
        auto [t_slot, idx] = free_at.top();
        free_at.pop();
        double start = std::max(t_slot, next_dispatch);
        if (gap > 0.0) next_dispatch = start + gap;
        double dur = mean;
        if (blm.sigma > 0.0) {
            SplitMix64 rng(mix_seed(machine.seed, static_cast<std::uint64_t>(block)));
            dur = mean + blm.sigma * rng.next_gaussian();
        }
        dur = std::max(eps, dur);
        double finish = start + dur;
        makespan = std::max(makespan, finish);
        free_at.emplace(finish, counter++);
    }
    return makespan;
}

std::vector<SweepPoint> sweep_profile(const SimMachine& machine,
                                      const std::vector<i64>& g_list, i64 l,
                                      const BlockLatencyModel& blm, int macro_id,
                                      int micro_id) {
    if (g_list.empty()) throw std::invalid_argument("g_list must be non-empty");
    if (!std::is_sorted(g_list.begin(), g_list.end()))
        throw std::invalid_argument("g_list must be ascending");
    std::vector<SweepPoint> out;
    out.reserve(g_list.size());
    for (i64 g : g_list) {
        SimMachine sub{machine.hw,
                       mix_seed(machine.seed, static_cast<std::uint64_t>(g))};
        out.push_back({g, simulate(sub, g, l, blm, macro_id, micro_id)});
    }
    return out;
}

OracleResult oracle_best(const SimMachine& machine, const KernelWorkload& x,
                         const ConfigRegistry& registry,
                         const SyntheticKernelGround& ground, double sigma,
                         int reps) {
    if (registry.feasible.empty())
        throw std::invalid_argument("registry has no feasible pairs");
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");

    BlockLatencyModel blm = ground.latency_model(sigma);
    OracleResult best{-1, -1, std::numeric_limits<double>::infinity()};
    for (const auto& [macro_id, micro_id] : registry.feasible) {
        auto [g, l] = map_workload(x, registry.macro(macro_id));
        double total = 0.0;
        for (int rep = 0; rep < reps; ++rep) {
            SimMachine sub{machine.hw,
                           mix_seed(machine.seed, static_cast<std::uint64_t>(macro_id),
                                    static_cast<std::uint64_t>(micro_id),
                                    static_cast<std::uint64_t>(rep))};
            total += simulate(sub, g, l, blm, macro_id, micro_id);
        }
        double latency = total / reps;
        if (latency < best.latency_us) best = {macro_id, micro_id, latency};
        // std::set iteration order already gives lexicographic tie-breaking
    }
    return best;
}

}  // namespace wavetune
