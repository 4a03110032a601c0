#pragma once

#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qamle/oracles.hpp"
#include "qamle/version.hpp"

namespace qamle {

// ---------------------------------------------------------------------------
// Basic JSON plumbing
// ---------------------------------------------------------------------------

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(path + ": " + e.what());
    }
    return j;
}

/// Write-then-rename so readers never observe a partial file.
inline void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open " + tmp + " for writing");
        out << contents;
        if (!out) throw io_error("write to " + tmp + " failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw io_error("rename " + tmp + " -> " + path + " failed");
}

inline json ball_union_to_json(const BallUnion& omega) {
    json balls = json::array();
    for (const Ball& b : omega.balls) balls.push_back({{"center", b.center}, {"radius", b.radius}});
    return {{"balls", balls}};
}

inline BallUnion ball_union_from_json(const json& j) {
    BallUnion omega;
    if (!j.contains("balls") || !j["balls"].is_array())
        throw parse_error("ball union: expected object with a \"balls\" array");
    for (const auto& b : j["balls"])
        omega.balls.push_back(Ball{b.at("center").get<index_t>(), b.at("radius").get<double>()});
    return omega;
}

// ---------------------------------------------------------------------------
// Domain ingestion
// ---------------------------------------------------------------------------

namespace detail {

inline MetricSpec metric_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "euclidean") return MetricSpec::euclidean();
        throw parse_error("domain: unknown metric \"" + j.get<std::string>() + "\"");
    }
    if (j.is_object() && j.contains("graph")) return MetricSpec::graph(j["graph"].get<int>());
    throw parse_error("domain: metric must be \"euclidean\" or {\"graph\": k}");
}

inline std::vector<vecd> points_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw parse_error("domain: \"points\" must be a nonempty array");
    std::vector<vecd> pts;
    pts.reserve(j.size());
    for (const auto& row : j) {
        if (!row.is_array() || row.empty())
            throw parse_error("domain: point " + std::to_string(pts.size()) +
                              " must be a nonempty coordinate array");
        pts.push_back(row.get<vecd>());
    }
    return pts;
}

} // namespace detail

struct DomainData {
    std::vector<vecd> points;
    MetricSpec metric;
    index_set constraints;
    double h = 0.0;
};

inline DomainData load_domain_data(const std::string& path,
                                   const index_set& constraints_override = {}) {
    DomainData data;
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            vecd row;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                try {
                    row.push_back(std::stod(cell));
                } catch (...) {
                    throw parse_error(path + ":" + std::to_string(lineno) +
                                      ": cannot parse coordinate \"" + cell + "\"");
                }
            }
            data.points.push_back(std::move(row));
        }
        data.metric = MetricSpec::euclidean();
        data.constraints = constraints_override;
    } else {
        const json j = read_json_file(path);
        if (!j.contains("points")) throw parse_error(path + ": missing \"points\"");
        data.points = detail::points_from_json(j["points"]);
        data.metric = j.contains("metric") ? detail::metric_from_json(j["metric"])
                                           : MetricSpec::euclidean();
        if (j.contains("constraints")) data.constraints = j["constraints"].get<index_set>();
        if (!constraints_override.empty()) data.constraints = constraints_override;
        if (j.contains("h")) data.h = j["h"].get<double>();
    }
    if (data.constraints.empty())
        throw parse_error(path + ": no constraint set (provide \"constraints\" or --constraints)");
    return data;
}

// ---------------------------------------------------------------------------
// Field ingestion
// ---------------------------------------------------------------------------

namespace detail {

inline index_t parse_index_key(const std::string& key, std::size_t limit, const std::string& what) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(key, &pos);
    } catch (...) {
        throw parse_error(what + ": key \"" + key + "\" is not a point index");
    }
    if (pos != key.size()) throw parse_error(what + ": key \"" + key + "\" is not a point index");
    if (v >= limit)
        throw parse_error(what + ": index " + key + " out of range (domain has " +
                          std::to_string(limit) + " points)");
    return static_cast<index_t>(v);
}

} // namespace detail

inline ScalarField scalar_field_from_json(const json& j, const DiscreteDomain& dom) {
    if (!j.contains("values") || !j["values"].is_object())
        throw parse_error("field: expected {\"values\": {index: value}}");
    ScalarField f(dom);
    for (const auto& [key, val] : j["values"].items()) {
        const index_t i = detail::parse_index_key(key, dom.size(), "field values");
        if (!val.is_number()) throw parse_error("field values: value at key " + key + " not a number");
        f.set(i, val.get<double>());
    }
    return f;
}

inline JetField jet_field_from_json(const json& j, const DiscreteDomain& dom) {
    if (!j.contains("jets") || !j["jets"].is_object())
        throw parse_error("field: expected {\"jets\": {index: {value, grad}}}");
    JetField f(dom);
    for (const auto& [key, val] : j["jets"].items()) {
        const index_t i = detail::parse_index_key(key, dom.size(), "field jets");
        Jet jet;
        jet.value = val.at("value").get<double>();
        jet.grad = val.at("grad").get<vecd>();
        if (static_cast<int>(jet.grad.size()) != dom.dim())
            throw parse_error("field jets: gradient at key " + key + " has dimension " +
                              std::to_string(jet.grad.size()) + ", domain has " +
                              std::to_string(dom.dim()));
        f.set(i, jet);
    }
    return f;
}

// ---------------------------------------------------------------------------
// Problem assembly
// ---------------------------------------------------------------------------

/// A parsed and validated problem: domain plus the constraint field, one of
/// the two kinds populated according to the requested functional.
struct Problem {
    std::unique_ptr<DiscreteDomain> domain;
    std::optional<ScalarField> scalar;
    std::optional<JetField> jets;
    FunctionalKind kind = FunctionalKind::lip;

    double constraint_value() const {
        return kind == FunctionalKind::lip
                   ? detail::phi_set_or_zero(*scalar, scalar->support())
                   : detail::phi_set_or_zero(*jets, jets->support());
    }
};

inline Problem load_problem(const std::string& domain_path, const std::string& field_path,
                            FunctionalKind kind, const index_set& constraints_override = {}) {
    DomainData data = load_domain_data(domain_path, constraints_override);
    const json field_json = read_json_file(field_path);

    if (kind == FunctionalKind::lip && field_json.contains("jets"))
        throw parse_error(field_path + ": payload carries jets but the functional is lip");
    if (kind == FunctionalKind::gamma1 && field_json.contains("values"))
        throw parse_error(field_path + ": payload carries scalar values but the functional is gamma1");
    if (kind == FunctionalKind::gamma1 && data.metric.kind != MetricSpec::Kind::euclidean)
        throw parse_error(domain_path + ": the gamma1 functional requires the euclidean metric");

    // Coincident constraint points with conflicting data make the constant
    // infinite; detect before the domain constructor rejects the duplicates.
    if (kind == FunctionalKind::lip && field_json.contains("values")) {
        const auto& values = field_json["values"];
        for (std::size_t a = 0; a < data.constraints.size(); ++a)
            for (std::size_t b = a + 1; b < data.constraints.size(); ++b) {
                const index_t ia = data.constraints[a], ib = data.constraints[b];
                if (ia >= data.points.size() || ib >= data.points.size()) continue;
                if (data.points[ia] != data.points[ib]) continue;
                const auto ka = std::to_string(ia), kb = std::to_string(ib);
                if (values.contains(ka) && values.contains(kb) &&
                    values[ka].get<double>() != values[kb].get<double>())
                    throw infinite_lipschitz("constraint points " + ka + " and " + kb +
                                             " coincide but carry different values");
            }
    }

    Problem p;
    p.kind = kind;
    p.domain = std::make_unique<DiscreteDomain>(std::move(data.points), data.metric,
                                                data.constraints, data.h);

    auto check_support = [&](const index_set& support) {
        if (support != p.domain->constraint_set())
            throw parse_error(field_path +
                              ": field must be defined exactly on the domain constraint set");
    };
    if (kind == FunctionalKind::lip) {
        p.scalar = scalar_field_from_json(field_json, *p.domain);
        check_support(p.scalar->support());
    } else {
        p.jets = jet_field_from_json(field_json, *p.domain);
        check_support(p.jets->support());
    }
    return p;
}

// ---------------------------------------------------------------------------
// Solution artifacts and logs
// ---------------------------------------------------------------------------

inline json config_to_json(const RefinementConfig& cfg) {
    return {{"rho", cfg.rho},
            {"n0", cfg.n0},
            {"alpha", cfg.alpha},
            {"sigma0", cfg.sigma0},
            {"max_iter", cfg.max_iter},
            {"scan", to_string(cfg.scan)},
            {"seed", cfg.seed},
            {"samples_per_iter", cfg.samples_per_iter},
            {"c_b", cfg.boundary_factor}};
}

inline RefinementConfig config_from_json(const json& j) {
    RefinementConfig cfg;
    cfg.rho = j.at("rho").get<double>();
    cfg.n0 = j.at("n0").get<std::size_t>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.sigma0 = j.at("sigma0").get<double>();
    cfg.max_iter = j.at("max_iter").get<long>();
    cfg.scan = j.at("scan").get<std::string>() == "random" ? ScanMode::random
                                                           : ScanMode::exhaustive;
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.samples_per_iter = j.at("samples_per_iter").get<int>();
    cfg.boundary_factor = j.at("c_b").get<double>();
    return cfg;
}

namespace detail {

inline json field_payload(const ScalarField& f) {
    json values = json::object();
    for (index_t i : f.support()) values[std::to_string(i)] = f.at(i);
    return {{"values", values}};
}

inline json field_payload(const JetField& f) {
    json jets = json::object();
    for (index_t i : f.support()) {
        const Jet& jet = f.at(i);
        jets[std::to_string(i)] = {{"value", jet.value}, {"grad", jet.grad}};
    }
    return {{"jets", jets}};
}

} // namespace detail

/// Serialize a finished solve. Reals survive the round trip bit-exactly
/// (shortest round-trip decimal representation).
template <class FieldT>
json solution_to_json(const SolveResult<FieldT>& result, const RefinementConfig& cfg) {
    json j = {{"tool", std::string(kToolName) + " " + kToolVersion},
              {"functional", to_string(functional_kind_v<FieldT>)},
              {"K", result.k},
              {"iterations", result.iterations()},
              {"status",
               result.status == SolveStatus::converged ? "converged" : "max_iter_exceeded"},
              {"final_max_gap",
               result.final_max_gap == kNoAdmissiblePair ? json() : json(result.final_max_gap)},
              {"config", config_to_json(cfg)}};
    j.update(detail::field_payload(result.u));
    return j;
}

template <class FieldT>
void save_solution(const SolveResult<FieldT>& result, const RefinementConfig& cfg,
                   const std::string& path) {
    write_file_atomic(path, solution_to_json(result, cfg).dump(2) + "\n");
}

inline json log_record_to_json(std::size_t n, const IterationRecord& rec, double k) {
    return {{"n", n},
            {"omega", ball_union_to_json(rec.omega)},
            {"gap", rec.gap},
            {"phi_before", rec.phi_before},
            {"phi_after", rec.phi_after},
            {"K", k}};
}

inline void save_log(const std::vector<IterationRecord>& log, double k, const std::string& path) {
    std::string out;
    for (std::size_t i = 0; i < log.size(); ++i)
        out += log_record_to_json(i + 1, log[i], k).dump() + "\n";
    write_file_atomic(path, out);
}

struct LogEntry {
    std::size_t n = 0;
    BallUnion omega;
    double gap = 0.0, phi_before = 0.0, phi_after = 0.0, k = 0.0;
};

inline std::vector<LogEntry> load_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::vector<LogEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw parse_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        LogEntry e;
        e.n = j.at("n").get<std::size_t>();
        e.omega = ball_union_from_json(j.at("omega"));
        e.gap = j.at("gap").get<double>();
        e.phi_before = j.at("phi_before").get<double>();
        e.phi_after = j.at("phi_after").get<double>();
        e.k = j.at("K").get<double>();
        entries.push_back(std::move(e));
    }
    return entries;
}

/// Rebuild a total field from a saved solution payload.
inline ScalarField scalar_solution_field(const json& artifact, const DiscreteDomain& dom) {
    return scalar_field_from_json(artifact, dom);
}

inline JetField jet_solution_field(const json& artifact, const DiscreteDomain& dom) {
    return jet_field_from_json(artifact, dom);
}

// ---------------------------------------------------------------------------
// Plot export and reports
// ---------------------------------------------------------------------------

namespace detail {

inline void append_csv_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

} // namespace detail

template <class FieldT>
void export_plot_csv(const FieldT& f, const std::string& path) {
    const DiscreteDomain& dom = f.domain();
    std::string out;
    for (int k = 0; k < dom.dim(); ++k) out += "x" + std::to_string(k + 1) + ",";
    out += "value";
    if constexpr (functional_kind_v<FieldT> == FunctionalKind::gamma1)
        for (int k = 0; k < dom.dim(); ++k) out += ",g" + std::to_string(k + 1);
    out += "\n";
    for (index_t i : f.support()) {
        const cspan p = dom.point(i);
        for (int k = 0; k < dom.dim(); ++k) {
            detail::append_csv_double(out, p[k]);
            out += ",";
        }
        if constexpr (functional_kind_v<FieldT> == FunctionalKind::gamma1) {
            detail::append_csv_double(out, f.at(i).value);
            for (int k = 0; k < dom.dim(); ++k) {
                out += ",";
                detail::append_csv_double(out, f.at(i).grad[k]);
            }
        } else {
            detail::append_csv_double(out, f.at(i));
        }
        out += "\n";
    }
    write_file_atomic(path, out);
}

inline json check_report_to_json(const CheckReport& report) {
    return {{"name", report.name},
            {"passed", report.passed},
            {"worst_violation", report.worst_violation},
            {"tolerance", report.tolerance},
            {"witness", report.witness}};
}

inline void save_check_report(const CheckReport& report, const std::string& path) {
    write_file_atomic(path, check_report_to_json(report).dump(2) + "\n");
}

} // namespace qamle
