#include "wavetune/kernel_map.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace wavetune {

using nlohmann::json;

const char* family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::DenseGemm: return "dense_gemm";
        case KernelFamily::GroupedGemm: return "grouped_gemm";
        case KernelFamily::FlashAttention: return "flash_attention";
    }
    return "unknown";
}

KernelFamily family_from_name(std::string_view name) {
    if (name == "dense_gemm" || name == "gemm") return KernelFamily::DenseGemm;
    if (name == "grouped_gemm" || name == "moe") return KernelFamily::GroupedGemm;
    if (name == "flash_attention" || name == "attention")
        return KernelFamily::FlashAttention;
    throw std::invalid_argument("unknown kernel family: " + std::string(name));
}

KernelFamily family_of(const KernelWorkload& x) {
    if (std::holds_alternative<DenseGemm>(x)) return KernelFamily::DenseGemm;
    if (std::holds_alternative<GroupedGemm>(x)) return KernelFamily::GroupedGemm;
    return KernelFamily::FlashAttention;
}

std::string workload_to_string(const KernelWorkload& x) {
    std::ostringstream out;
    if (const auto* d = std::get_if<DenseGemm>(&x)) {
        out << "dense_gemm," << d->m << "," << d->n << "," << d->k;
    } else if (const auto* gg = std::get_if<GroupedGemm>(&x)) {
        out << "grouped_gemm," << gg->n << "," << gg->k << ",";
        for (std::size_t i = 0; i < gg->group_rows.size(); ++i) {
            if (i) out << ';';
            out << gg->group_rows[i];
        }
    } else {
        const auto& a = std::get<FlashAttention>(x);
        out << "flash_attention," << a.n_heads << "," << a.s_q << "," << a.s_kv;
    }
    return out.str();
}

KernelWorkload workload_from_string(std::string_view text) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : text) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    if (fields.size() != 4)
        throw std::invalid_argument("workload must have 4 comma-separated fields: " +
                                    std::string(text));
    const std::string& tag = fields[0];
    auto num = [&](const std::string& s) -> i64 {
        std::size_t pos = 0;
        i64 v = std::stoll(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument("bad integer in workload: " + s);
        return v;
    };
    if (tag == "dense_gemm")
        return DenseGemm{num(fields[1]), num(fields[2]), num(fields[3])};
    if (tag == "flash_attention")
        return FlashAttention{num(fields[1]), num(fields[2]), num(fields[3])};
    if (tag == "grouped_gemm") {
        GroupedGemm gg;
        gg.n = num(fields[1]);
        gg.k = num(fields[2]);
        std::string part;
        std::istringstream rows(fields[3]);
        while (std::getline(rows, part, ';')) gg.group_rows.push_back(num(part));
        if (gg.group_rows.empty())
            throw std::invalid_argument("grouped_gemm needs at least one group");
        return gg;
    }
    throw std::invalid_argument("unknown workload tag: " + tag);
}

// ---- ConfigRegistry --------------------------------------------------------

const MacroConfig& ConfigRegistry::macro(int id) const {
    for (const auto& m : macros)
        if (m.id == id) return m;
    throw std::out_of_range("no macro config with id " + std::to_string(id));
}

const MicroConfig& ConfigRegistry::micro(int id) const {
    for (const auto& u : micros)
        if (u.id == id) return u;
    throw std::out_of_range("no micro config with id " + std::to_string(id));
}

std::vector<int> ConfigRegistry::feasible_micros(int macro_id) const {
    std::vector<int> out;
    for (const auto& [ma, mi] : feasible)
        if (ma == macro_id) out.push_back(mi);
    std::sort(out.begin(), out.end());
    return out;
}

void ConfigRegistry::validate() const {
    std::set<int> macro_ids, micro_ids;
    for (const auto& m : macros) {
        if (!macro_ids.insert(m.id).second)
            throw std::invalid_argument("duplicate macro_id " + std::to_string(m.id));
        if (const auto* gt = std::get_if<GemmTiles>(&m.tiles)) {
            if (gt->t_m < 1 || gt->t_n < 1 || gt->t_k < 1)
                throw std::invalid_argument("tile dims must be >= 1");
            if (family == KernelFamily::FlashAttention)
                throw std::invalid_argument("gemm tiles in attention registry");
        } else {
            const auto& at = std::get<AttnTiles>(m.tiles);
            if (at.t_q < 1 || at.t_kv < 1)
                throw std::invalid_argument("tile dims must be >= 1");
            if (family != KernelFamily::FlashAttention)
                throw std::invalid_argument("attention tiles in gemm registry");
        }
    }
    for (const auto& u : micros) {
        if (!micro_ids.insert(u.id).second)
            throw std::invalid_argument("duplicate micro_id " + std::to_string(u.id));
        if (u.n_stages < 1 || u.n_warps < 1)
            throw std::invalid_argument("micro params must be >= 1");
    }
    for (const auto& [ma, mi] : feasible) {
        if (!macro_ids.count(ma) || !micro_ids.count(mi))
            throw std::invalid_argument("feasible pair references unknown id");
    }
    for (int ma : macro_ids) {
        if (feasible_micros(ma).empty())
            throw std::invalid_argument("macro " + std::to_string(ma) +
                                        " has no feasible micro");
    }
}

static json registry_to_json(const ConfigRegistry& r) {
    json j;
    j["version"] = 1;
    j["family"] = family_name(r.family);
    j["macros"] = json::array();
    for (const auto& m : r.macros) {
        json jm{{"id", m.id}};
        if (const auto* gt = std::get_if<GemmTiles>(&m.tiles)) {
            jm["t_m"] = gt->t_m;
            jm["t_n"] = gt->t_n;
            jm["t_k"] = gt->t_k;
        } else {
            const auto& at = std::get<AttnTiles>(m.tiles);
            jm["t_q"] = at.t_q;
            jm["t_kv"] = at.t_kv;
        }
        j["macros"].push_back(jm);
    }
    j["micros"] = json::array();
    for (const auto& u : r.micros) {
        json ju{{"id", u.id}, {"n_stages", u.n_stages}, {"n_warps", u.n_warps}};
        if (!u.extra.empty()) {
            json je = json::object();
            for (const auto& [k, v] : u.extra) je[k] = v;
            ju["extra"] = je;
        }
        j["micros"].push_back(ju);
    }
    j["feasible"] = json::array();
    for (const auto& [ma, mi] : r.feasible) j["feasible"].push_back({ma, mi});
    return j;
}

static ConfigRegistry registry_from_json(const json& j) {
    if (!j.contains("version"))
        throw std::invalid_argument("registry file missing 'version' field");
    if (j.at("version").get<int>() != 1)
        throw std::invalid_argument("registry version mismatch: expected 1, found " +
                                    j.at("version").dump());
    ConfigRegistry r;
    r.family = family_from_name(j.at("family").get<std::string>());
    for (const auto& jm : j.at("macros")) {
        MacroConfig m;
        m.id = jm.at("id").get<int>();
        if (jm.contains("t_q"))
            m.tiles = AttnTiles{jm.at("t_q").get<i64>(), jm.at("t_kv").get<i64>()};
        else
            m.tiles = GemmTiles{jm.at("t_m").get<i64>(), jm.at("t_n").get<i64>(),
                                jm.at("t_k").get<i64>()};
        r.macros.push_back(m);
    }
    for (const auto& ju : j.at("micros")) {
        MicroConfig u;
        u.id = ju.at("id").get<int>();
        u.n_stages = ju.at("n_stages").get<i64>();
        u.n_warps = ju.at("n_warps").get<i64>();
        if (ju.contains("extra"))
            for (const auto& [k, v] : ju.at("extra").items())
                u.extra.emplace_back(k, v.get<i64>());
        r.micros.push_back(u);
    }
    for (const auto& jp : j.at("feasible"))
        r.feasible.emplace(jp.at(0).get<int>(), jp.at(1).get<int>());
    r.validate();
    return r;
}

ConfigRegistry ConfigRegistry::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open registry file: " + path);
    json j;
    in >> j;
    return registry_from_json(j);
}

void ConfigRegistry::save(const std::string& path) const {
    validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write registry file: " + path);
    out << registry_to_json(*this).dump(2) << "\n";
}

// ---- Mapping ---------------------------------------------------------------

std::pair<i64, i64> map_workload(const KernelWorkload& x, const MacroConfig& c) {
    if (const auto* d = std::get_if<DenseGemm>(&x)) {
        const auto* t = std::get_if<GemmTiles>(&c.tiles);
        if (!t) throw std::invalid_argument("dense_gemm workload needs gemm tiles");
        if (d->m < 1 || d->n < 1 || d->k < 1)
            throw std::invalid_argument("dense_gemm dims must be >= 1");
        return {ceil_div(d->m, t->t_m) * ceil_div(d->n, t->t_n),
                ceil_div(d->k, t->t_k)};
    }
    if (const auto* gg = std::get_if<GroupedGemm>(&x)) {
        const auto* t = std::get_if<GemmTiles>(&c.tiles);
        if (!t) throw std::invalid_argument("grouped_gemm workload needs gemm tiles");
        if (gg->n < 1 || gg->k < 1)
            throw std::invalid_argument("grouped_gemm dims must be >= 1");
        i64 g = 0;
        for (i64 rows : gg->group_rows) {
            if (rows < 0) throw std::invalid_argument("negative group row count");
            if (rows > 0) g += ceil_div(rows, t->t_m) * ceil_div(gg->n, t->t_n);
        }
        if (g == 0)
            throw std::invalid_argument("grouped_gemm maps to an empty grid");
        return {g, ceil_div(gg->k, t->t_k)};
    }
    const auto& a = std::get<FlashAttention>(x);
    const auto* t = std::get_if<AttnTiles>(&c.tiles);
    if (!t) throw std::invalid_argument("attention workload needs attention tiles");
    if (a.n_heads < 1 || a.s_q < 1 || a.s_kv < 1)
        throw std::invalid_argument("attention dims must be >= 1");
    return {a.n_heads * ceil_div(a.s_q, t->t_q), ceil_div(a.s_kv, t->t_kv)};
}

int wave_count(i64 g, const HardwareSpec& hw) {
    if (g < 1) throw std::invalid_argument("grid size must be >= 1");
    if (hw.n_sm < 1 || hw.blocks_per_sm < 1)
        throw std::invalid_argument("hardware spec must have positive capacities");
    return static_cast<int>(ceil_div(g, hw.slots()));
}

PhysicalCoords physical_coords(const KernelWorkload& x, const MacroConfig& c,
                               const HardwareSpec& hw) {
    auto [g, l] = map_workload(x, c);
    return PhysicalCoords{g, l, wave_count(g, hw)};
}

KernelWorkload instantiate_workload(GridFactoring f, i64 l, const MacroConfig& c) {
    const auto* t = std::get_if<GemmTiles>(&c.tiles);
    if (!t) throw std::invalid_argument("grid factoring requires gemm tiles");
    if (f.m_g < 1 || f.n_g < 1 || l < 1)
        throw std::invalid_argument("factoring and loop count must be >= 1");
    return DenseGemm{f.m_g * t->t_m, f.n_g * t->t_n, l * t->t_k};
}

KernelWorkload instantiate_workload_attention(i64 g, i64 l, const MacroConfig& c,
                                              i64 n_heads) {
    const auto* t = std::get_if<AttnTiles>(&c.tiles);
    if (!t) throw std::invalid_argument("attention instantiation requires attention tiles");
    if (n_heads < 1 || g < 1 || l < 1)
        throw std::invalid_argument("grid, loop count, and heads must be >= 1");
    if (g % n_heads != 0)
        throw std::invalid_argument("attention grid size " + std::to_string(g) +
                                    " not divisible by n_heads " +
                                    std::to_string(n_heads));
    return FlashAttention{n_heads, (g / n_heads) * t->t_q, l * t->t_kv};
}

}  // namespace wavetune
