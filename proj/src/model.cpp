#include "wavetune/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

namespace wavetune {

using nlohmann::json;

// ---- OLS -------------------------------------------------------------------

FitResult fit_bucket(const std::vector<FitSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("fit_bucket: no samples");
    const int n = static_cast<int>(samples.size());

    Eigen::MatrixXd design(n, 4);
    Eigen::VectorXd target(n);
    for (int i = 0; i < n; ++i) {
        const auto& s = samples[i];
        design(i, 0) = s.g * s.l;
        design(i, 1) = s.g;
        design(i, 2) = s.l;
        design(i, 3) = 1.0;
        target(i) = s.latency_us;
    }

    // Column scaling to unit max-abs keeps the QR well conditioned when G*L
    // dwarfs the linear columns.
    Eigen::Vector4d scale;
    Eigen::MatrixXd scaled = design;
    for (int c = 0; c < 4; ++c) {
        double m = design.col(c).cwiseAbs().maxCoeff();
        scale(c) = (m > 0) ? m : 1.0;
        scaled.col(c) /= scale(c);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());

    FitResult result;
    Eigen::Vector4d coeffs = Eigen::Vector4d::Zero();
    if (rank >= 4 && n >= 4) {
        coeffs = qr.solve(target);
    } else {
        // Reduced fit: keep the pivot columns, zero the rest.
        result.degenerate = true;
        const auto perm = qr.colsPermutation().indices();
        int keep = std::min<int>(rank, n);
        if (keep < 1) keep = 1;
        Eigen::MatrixXd sub(n, keep);
        for (int c = 0; c < keep; ++c) sub.col(c) = scaled.col(perm(c));
        Eigen::VectorXd partial = sub.householderQr().solve(target);
        for (int c = 0; c < keep; ++c) coeffs(perm(c)) = partial(c);
    }
    for (int c = 0; c < 4; ++c) coeffs(c) /= scale(c);
    result.coeffs = {coeffs(0), coeffs(1), coeffs(2), coeffs(3)};

    Eigen::VectorXd fitted = design * coeffs;
    double ss_res = (target - fitted).squaredNorm();
    double mean = target.mean();
    double ss_tot = (target.array() - mean).square().sum();
    result.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res < 1e-18 ? 1.0 : 0.0);
    double mape = 0.0;
    for (int i = 0; i < n; ++i)
        mape += std::abs(target(i) - fitted(i)) / std::abs(target(i));
    result.mape = mape / n;
    return result;
}

// ---- Shared micro selection ------------------------------------------------

SharedMicroSelection select_shared_micro(const std::vector<ProfileRecord>& group) {
    if (group.empty())
        throw std::invalid_argument("select_shared_micro: empty group");

    std::set<i64> all_g;
    std::map<int, std::map<i64, double>> by_micro;  // micro -> g -> latency
    for (const auto& r : group) {
        all_g.insert(r.g);
        by_micro[r.micro_id][r.g] = r.latency_us;
    }

    auto pick = [&](bool require_full) -> SharedMicroSelection {
        SharedMicroSelection best;
        double best_mean = 0.0;
        std::size_t best_cover = 0;
        for (const auto& [micro_id, per_g] : by_micro) {
            if (require_full && per_g.size() != all_g.size()) continue;
            double mean = 0.0;
            for (const auto& [g, t] : per_g) mean += t;
            mean /= per_g.size();
            bool better =
                best.micro_id < 0 ||
                (require_full ? mean < best_mean : per_g.size() > best_cover);
            if (better) {
                best.micro_id = micro_id;
                best_mean = mean;
                best_cover = per_g.size();
                best.samples.assign(per_g.begin(), per_g.end());
            }
        }
        return best;
    };

    SharedMicroSelection sel = pick(true);
    if (sel.micro_id < 0) {
        sel = pick(false);
        sel.partial_coverage = true;
    }
    return sel;
}

// ---- Table construction ----------------------------------------------------

namespace {

struct MacroGroups {
    // wave -> l -> records
    std::map<int, std::map<i64, std::vector<ProfileRecord>>> groups;
};

MacroGroups group_records(const std::vector<ProfileRecord>& records, int macro_id) {
    MacroGroups mg;
    for (const auto& r : records)
        if (r.macro_id == macro_id) mg.groups[r.w][r.l].push_back(r);
    return mg;
}

}  // namespace

ExtrapolationFit fit_extrapolation(const std::vector<ProfileRecord>& records,
                                   int W, int p) {
    if (records.empty())
        throw std::invalid_argument("fit_extrapolation: no records");
    const int macro_id = records.front().macro_id;
    MacroGroups mg = group_records(records, macro_id);

    const int w_lo = std::max(1, W - p + 1);
    std::vector<FitSample> pooled;
    std::map<i64, std::map<int, int>> votes;  // l -> micro -> count
    int waves_used = 0;
    for (const auto& [w, per_l] : mg.groups) {
        if (w < w_lo || w > W) continue;
        ++waves_used;
        for (const auto& [l, recs] : per_l) {
            SharedMicroSelection sel = select_shared_micro(recs);
            votes[l][sel.micro_id] += 1;
            for (const auto& [g, t] : sel.samples)
                pooled.push_back({static_cast<double>(g), static_cast<double>(l), t});
        }
    }

    ExtrapolationFit out;
    if (waves_used >= 2) {
        FitResult fit = fit_bucket(pooled);
        out.theta_ext = fit.coeffs;
        if (fit.degenerate) out.flags.push_back("ext_degenerate_fit");
        for (const auto& [l, counts] : votes) {
            int best_micro = -1, best_count = -1;
            for (const auto& [micro, count] : counts)
                if (count > best_count) {  // map order gives smallest-id ties
                    best_micro = micro;
                    best_count = count;
                }
            out.ext_anchors[l] = best_micro;
        }
    } else if (!mg.groups.empty()) {
        // Fewer than 2 waves in the window: copy the highest available wave.
        const auto& [w_top, per_l] = *mg.groups.rbegin();
        std::vector<FitSample> samples;
        for (const auto& [l, recs] : per_l) {
            SharedMicroSelection sel = select_shared_micro(recs);
            out.ext_anchors[l] = sel.micro_id;
            for (const auto& [g, t] : sel.samples)
                samples.push_back({static_cast<double>(g), static_cast<double>(l), t});
        }
        out.theta_ext = fit_bucket(samples).coeffs;
        out.flags.push_back("ext_insufficient_waves");
    } else {
        throw std::invalid_argument("fit_extrapolation: no usable waves");
    }
    return out;
}

std::vector<DualTable> build_dual_table(const std::vector<ProfileRecord>& records,
                                        const ConfigRegistry& registry,
                                        const HardwareSpec& hw,
                                        const TableBuildParams& params) {
    if (records.empty())
        throw std::invalid_argument("build_dual_table: empty record set");

    int W = params.W;
    if (W <= 0)
        for (const auto& r : records) W = std::max(W, r.w);

    std::vector<DualTable> tables;
    for (const auto& macro : registry.macros) {
        MacroGroups mg = group_records(records, macro.id);
        if (mg.groups.empty()) {
            std::cerr << "fit: macro " << macro.id << " has no records, omitted\n";
            continue;
        }
        DualTable table;
        table.macro_id = macro.id;
        table.hardware = hw.name;
        table.W = W;
        table.p = params.p;

        std::vector<ProfileRecord> macro_records;
        for (const auto& r : records)
            if (r.macro_id == macro.id) macro_records.push_back(r);

        for (const auto& [w, per_l] : mg.groups) {
            std::vector<FitSample> bucket;
            for (const auto& [l, recs] : per_l) {
                SharedMicroSelection sel = select_shared_micro(recs);
                table.anchor_table[w][l] = sel.micro_id;
                if (sel.partial_coverage)
                    table.diagnostics[w].flags.push_back(
                        "partial_micro_coverage_l" + std::to_string(l));
                for (const auto& [g, t] : sel.samples)
                    bucket.push_back(
                        {static_cast<double>(g), static_cast<double>(l), t});
            }
            FitResult fit = fit_bucket(bucket);
            table.coeff_table[w] = fit.coeffs;
            WaveDiagnostics& diag = table.diagnostics[w];
            diag.r2 = fit.r2;
            diag.mape = fit.mape;
            diag.samples = static_cast<int>(bucket.size());
            if (fit.degenerate) diag.flags.push_back("degenerate_fit");
            if (bucket.size() < 4) diag.flags.push_back("sparse_bucket");
        }

        ExtrapolationFit ext = fit_extrapolation(macro_records, W, params.p);
        table.theta_ext = ext.theta_ext;
        table.ext_anchors = ext.ext_anchors;
        table.ext_flags = ext.flags;
        tables.push_back(std::move(table));
    }
    if (tables.empty())
        throw std::runtime_error("build_dual_table: no macro produced a table");
    return tables;
}

// ---- Serialization ---------------------------------------------------------

namespace {

constexpr int kSchemaVersion = 1;

std::string hexf(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double unhexf(const json& j, const char* field) {
    if (!j.is_string())
        throw std::runtime_error(std::string("table artifact field '") + field +
                                 "' must be a hex-float string");
    const std::string& s = j.get_ref<const std::string&>();
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw std::runtime_error(std::string("malformed float in field '") + field +
                                 "': " + s);
    return v;
}

json coeffs_to_json(const BilinearCoeffs& c) {
    return json::array({hexf(c.alpha), hexf(c.beta), hexf(c.gamma), hexf(c.delta)});
}

BilinearCoeffs coeffs_from_json(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 4)
        throw std::runtime_error(std::string("field '") + field +
                                 "' must be a 4-element coefficient array");
    return {unhexf(j[0], field), unhexf(j[1], field), unhexf(j[2], field),
            unhexf(j[3], field)};
}

}  // namespace

void save_tables(const TableArtifact& artifact, const std::string& path) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kernel_family"] = family_name(artifact.family);
    j["tables"] = json::array();
    for (const auto& t : artifact.tables) {
        json jt;
        jt["macro_id"] = t.macro_id;
        jt["hardware"] = t.hardware;
        jt["W"] = t.W;
        jt["p"] = t.p;
        jt["coeffs"] = json::object();
        for (const auto& [w, c] : t.coeff_table)
            jt["coeffs"][std::to_string(w)] = coeffs_to_json(c);
        jt["theta_ext"] = coeffs_to_json(t.theta_ext);
        jt["anchors"] = json::object();
        for (const auto& [w, per_l] : t.anchor_table) {
            json ja = json::object();
            for (const auto& [l, micro] : per_l) ja[std::to_string(l)] = micro;
            jt["anchors"][std::to_string(w)] = ja;
        }
        jt["ext_anchors"] = json::object();
        for (const auto& [l, micro] : t.ext_anchors)
            jt["ext_anchors"][std::to_string(l)] = micro;
        jt["diagnostics"] = json::object();
        for (const auto& [w, d] : t.diagnostics)
            jt["diagnostics"][std::to_string(w)] = {{"r2", hexf(d.r2)},
                                                    {"mape", hexf(d.mape)},
                                                    {"samples", d.samples},
                                                    {"flags", d.flags}};
        jt["ext_flags"] = t.ext_flags;
        j["tables"].push_back(jt);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write table artifact: " + path);
    out << j.dump(2) << "\n";
}

TableArtifact load_tables(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open table artifact: " + path);
    json j;
    in >> j;
    if (!j.contains("schema_version"))
        throw std::runtime_error("table artifact missing 'schema_version'");
    int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion)
        throw std::runtime_error("table artifact schema mismatch: expected " +
                                 std::to_string(kSchemaVersion) + ", found " +
                                 std::to_string(version));
    TableArtifact artifact;
    artifact.family = family_from_name(j.at("kernel_family").get<std::string>());
    for (const auto& jt : j.at("tables")) {
        DualTable t;
        t.macro_id = jt.at("macro_id").get<int>();
        t.hardware = jt.at("hardware").get<std::string>();
        t.W = jt.at("W").get<int>();
        t.p = jt.at("p").get<int>();
        for (const auto& [w, jc] : jt.at("coeffs").items())
            t.coeff_table[std::stoi(w)] = coeffs_from_json(jc, "coeffs");
        t.theta_ext = coeffs_from_json(jt.at("theta_ext"), "theta_ext");
        for (const auto& [w, ja] : jt.at("anchors").items())
            for (const auto& [l, micro] : ja.items())
                t.anchor_table[std::stoi(w)][std::stoll(l)] = micro.get<int>();
        for (const auto& [l, micro] : jt.at("ext_anchors").items())
            t.ext_anchors[std::stoll(l)] = micro.get<int>();
        for (const auto& [w, jd] : jt.at("diagnostics").items()) {
            WaveDiagnostics d;
            d.r2 = unhexf(jd.at("r2"), "diagnostics.r2");
            d.mape = unhexf(jd.at("mape"), "diagnostics.mape");
            d.samples = jd.at("samples").get<int>();
            d.flags = jd.at("flags").get<std::vector<std::string>>();
            t.diagnostics[std::stoi(w)] = d;
        }
        t.ext_flags = jt.at("ext_flags").get<std::vector<std::string>>();
        artifact.tables.push_back(std::move(t));
    }
    return artifact;
}

}  // namespace wavetune
