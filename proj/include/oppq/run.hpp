#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "oppq/basis.hpp"
#include "oppq/bound.hpp"
#include "oppq/cache.hpp"
#include "oppq/config.hpp"
#include "oppq/errors.hpp"
#include "oppq/indexing.hpp"
#include "oppq/problems.hpp"
#include "oppq/real.hpp"
#include "oppq/serialize.hpp"
#include "oppq/version.hpp"

namespace oppq {

using Json = nlohmann::json;

/// Validated run parameters.  All numeric fields stay decimal strings until
/// a precision scope is active.
struct RunConfig {
    std::string problem;
    std::map<std::string, std::string> params;  // problem parameters
    int digits = 60;
    std::vector<long> orders;  // 1D: expansion orders; hierarchical 2D: levels
    std::string window_lo;
    std::string window_hi;
    std::string grid_step;             // optional
    std::string cap;                   // optional explicit level cap
    std::string cap_margin = "0.10";   // used when cap is empty
    std::string out;                   // CSV path; empty = stdout only
    std::string cache_dir;             // empty = no cache

    static std::vector<long> parse_orders(const std::string& text) {
        std::vector<long> out;
        size_t pos = 0;
        while (pos <= text.size()) {
            const size_t comma = text.find(',', pos);
            const std::string tok =
                comma == std::string::npos ? text.substr(pos) : text.substr(pos, comma - pos);
            pos = comma == std::string::npos ? text.size() + 1 : comma + 1;
            if (tok.empty()) throw ConfigError("empty entry in order list '" + text + "'");
            size_t used = 0;
            long v = 0;
            try {
                v = std::stol(tok, &used);
            } catch (const std::exception&) {
                throw ConfigError("bad order '" + tok + "'");
            }
            if (used != tok.size()) throw ConfigError("bad order '" + tok + "'");
            out.push_back(v);
        }
        return out;
    }

    static RunConfig from_map(const ConfigMap& m) {
        RunConfig cfg;
        for (const auto& [key, value] : m) {
            if (key == "problem") {
                cfg.problem = value;
            } else if (key == "digits") {
                try {
                    size_t used = 0;
                    cfg.digits = std::stoi(value, &used);
                    if (used != value.size()) throw std::invalid_argument(value);
                } catch (const std::exception&) {
                    throw ConfigError("bad digits '" + value + "'");
                }
            } else if (key == "orders") {
                cfg.orders = parse_orders(value);
            } else if (key == "window") {
                const size_t colon = value.find(':', 1);
                if (colon == std::string::npos)
                    throw ConfigError("window needs the LO:HI form, got '" + value + "'");
                cfg.window_lo = value.substr(0, colon);
                cfg.window_hi = value.substr(colon + 1);
            } else if (key == "grid_step") {
                cfg.grid_step = value;
            } else if (key == "cap") {
                cfg.cap = value;
            } else if (key == "cap_margin") {
                cfg.cap_margin = value;
            } else if (key == "out") {
                cfg.out = value;
            } else if (key == "cache_dir") {
                cfg.cache_dir = value;
            } else if (key.rfind("param.", 0) == 0) {
                const std::string name = key.substr(6);
                if (name.empty()) throw ConfigError("empty parameter name");
                cfg.params[name] = value;
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
        return cfg;
    }

    /// Canonical snapshot of everything that determines numerical output
    /// (output/cache locations deliberately excluded).
    ConfigMap to_map() const {
        ConfigMap m;
        m["problem"] = problem;
        m["digits"] = std::to_string(digits);
        std::string olist;
        for (size_t i = 0; i < orders.size(); ++i)
            olist += (i ? "," : "") + std::to_string(orders[i]);
        m["orders"] = olist;
        m["window"] = window_lo + ":" + window_hi;
        if (!grid_step.empty()) m["grid_step"] = grid_step;
        if (!cap.empty()) m["cap"] = cap;
        m["cap_margin"] = cap_margin;
        for (const auto& [k, v] : params) m["param." + k] = v;
        return m;
    }

    std::string hash() const {
        return hex16(fnv1a64(std::string(kVersion) + "\n" + canonical_config(to_map())));
    }

    void validate() const {
        if (problem.empty()) throw ConfigError("no problem selected");
        if (digits < static_cast<int>(kMinDigits))
            throw ConfigError("precision must be at least " + std::to_string(kMinDigits) +
                              " digits");
        if (digits > 100000) throw ConfigError("precision beyond 100000 digits is not supported");
        if (orders.empty()) throw ConfigError("no orders requested");
        for (size_t i = 0; i < orders.size(); ++i) {
            if (orders[i] < 0) throw ConfigError("negative order");
            if (i && orders[i] <= orders[i - 1])
                throw ConfigError("orders must be strictly increasing");
        }
        if (window_lo.empty() || window_hi.empty())
            throw ConfigError("no energy window (window=LO:HI)");
    }
};

struct RunOutputs {
    std::string csv_text;
    std::string csv_path;     // empty when not written to disk
    Json record;              // null for scan runs
    std::string record_path;  // empty when not written
};

namespace detail {

inline long wall_ms_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 t0)
        .count();
}

inline void write_output_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (!p.parent_path().empty()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    write_file_atomic(p, content);
}

/// Per-order resume state stored next to the output file.
struct Checkpoint {
    std::string path;
    bool enabled = false;
    Json data;

    static Checkpoint open(const std::string& out, const std::string& config_hash,
                           std::vector<std::string>& warnings) {
        Checkpoint ck;
        if (out.empty()) return ck;
        ck.enabled = true;
        ck.path = out + ".ckpt";
        ck.data = Json{{"format", "oppq-ckpt-v1"},
                       {"config_hash", config_hash},
                       {"minima", Json::object()},
                       {"bounds", Json::object()}};
        std::error_code ec;
        if (!std::filesystem::exists(ck.path, ec)) return ck;
        try {
            Json loaded = Json::parse(read_file(ck.path));
            if (loaded.at("format") != "oppq-ckpt-v1") throw IoError("format tag");
            if (loaded.at("config_hash") != config_hash)
                throw IoError("config changed since the checkpoint was written");
            ck.data = std::move(loaded);
        } catch (const std::exception& e) {
            warnings.push_back(std::string("ignoring checkpoint ") + ck.path + ": " + e.what());
        }
        return ck;
    }

    void save() const {
        if (enabled) write_file_atomic(ck_path(), data.dump(2) + "\n");
    }
    void remove() const {
        if (!enabled) return;
        std::error_code ec;
        std::filesystem::remove(ck_path(), ec);
    }

  private:
    std::filesystem::path ck_path() const { return std::filesystem::path(path); }
};

/// Shared run state: problem, window, basis (cached when possible), and
/// lazily built per-order evaluators.
struct Pipeline {
    RunConfig cfg;
    ProblemSpec prob;
    std::optional<Cache> cache;
    BasisTable basis;
    std::vector<long> eorders;  // expansion orders aligned with cfg.orders
    Real lo, hi;
    Real step;  // 0 = auto per search window
    Json derived = Json::object();
    std::vector<std::string> warnings;
    int cache_hits = 0;
    int cache_builds = 0;

    explicit Pipeline(const RunConfig& c) : cfg(c) {
        cfg.validate();
        lo = parse_real(cfg.window_lo);
        hi = parse_real(cfg.window_hi);
        if (!(lo < hi)) throw ConfigError("empty energy window");
        step = cfg.grid_step.empty() ? Real(0) : parse_real(cfg.grid_step);
        if (!cfg.grid_step.empty() && !(step > 0)) throw ConfigError("grid step must be positive");

        prob = make_problem(cfg.problem, cfg.params);
        if (prob.dimension == 2) {
            const QzmEnergyMap map = qzm_energy_map(prob.field, lo, hi, prob.weight.eps0);
            QzmSpec frozen;
            frozen.field = prob.field;
            frozen.eps0 = map.eps0;
            prob = register_problem(frozen.spec());
            lo = map.window_lo;
            derived["eps0"] = to_exact_string(map.eps0);
            if (map.probe_minimum > 0)
                derived["eps0_probe_minimum"] = to_exact_string(map.probe_minimum);
        }

        for (const long o : cfg.orders)
            eorders.push_back(prob.dimension == 1 ? o : order_cap(o));
        {
            Json jo = Json::array();
            for (const long e : eorders) jo.push_back(e);
            derived["expansion_orders"] = jo;
        }

        const long n_max = eorders.back();
        const long max_degree = prob.dimension == 1 ? n_max : 2 * cfg.orders.back() + 1;
        if (!cfg.cache_dir.empty()) {
            cache.emplace(cfg.cache_dir);
            if (auto hit = cache->get_basis(prob.weight, n_max, max_degree, cfg.digits)) {
                basis = std::move(*hit);
                ++cache_hits;
            } else {
                basis = build_problem_basis(prob, n_max);
                cache->put_basis(basis);
                ++cache_builds;
            }
            for (const auto& w : cache->warnings()) warnings.push_back(w);
            cache->clear_warnings();
        } else {
            basis = build_problem_basis(prob, n_max);
            ++cache_builds;
        }
    }

    EnergyFn fn_for(long eorder) {
        auto it = evals_.find(eorder);
        if (it == evals_.end()) {
            auto ev = std::make_unique<Evaluator>(prob, basis, eorder, default_functional(prob));
            it = evals_.emplace(eorder, std::move(ev)).first;
        }
        Evaluator* ev = it->second.get();
        return [ev](const Real& e) { return (*ev)(e).value; };
    }

    Json base_record(const std::string& command) const {
        Json rec;
        rec["command"] = command;
        rec["version"] = std::string(kVersion);
        rec["config"] = Json(cfg.to_map());
        rec["config_hash"] = cfg.hash();
        rec["derived"] = derived;
        return rec;
    }

    Json diagnostics(const Json& wall_ms) const {
        Json d;
        d["digits"] = cfg.digits;
        d["residual_tolerance"] = to_exact_string(residual_tolerance());
        d["cache_hits"] = cache_hits;
        d["cache_builds"] = cache_builds;
        d["wall_ms"] = wall_ms;
        d["warnings"] = Json(warnings);
        return d;
    }

  private:
    std::map<long, std::unique_ptr<Evaluator>> evals_;
};

inline SequencePoint point_from_json(const Json& j, long eorder) {
    SequencePoint pt;
    pt.order = eorder;
    pt.energy = parse_real(j.at("energy").get<std::string>());
    pt.value = parse_real(j.at("value").get<std::string>());
    pt.monotone_up = j.at("monotone").get<bool>();
    pt.used_fallback = j.at("fallback").get<bool>();
    return pt;
}

inline Json point_to_json(const SequencePoint& pt) {
    return Json{{"energy", to_exact_string(pt.energy)},
                {"value", to_exact_string(pt.value)},
                {"monotone", pt.monotone_up},
                {"fallback", pt.used_fallback}};
}

/// Runs (or resumes) the per-order minima phase shared by the minima and
/// bound commands.
inline std::vector<SequencePoint> tracked_minima(Pipeline& P, Checkpoint& ck, Json& wall_ms) {
    std::vector<SequencePoint> rows;
    for (size_t i = 0; i < P.eorders.size(); ++i) {
        const long eorder = P.eorders[i];
        const std::string key = std::to_string(eorder);
        if (ck.enabled && ck.data["minima"].contains(key)) {
            rows.push_back(point_from_json(ck.data["minima"][key], eorder));
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        const SequencePoint* prev = rows.empty() ? nullptr : &rows.back();
        const SequencePoint pt =
            next_sequence_point(P.fn_for(eorder), eorder, prev, P.lo, P.hi, P.step);
        wall_ms["minima_" + key] = wall_ms_since(t0);
        rows.push_back(pt);
        if (ck.enabled) {
            ck.data["minima"][key] = point_to_json(pt);
            ck.save();
        }
    }
    return rows;
}

}  // namespace detail

/// Energy-grid sweep of the functional at each requested order.
inline RunOutputs run_scan(const RunConfig& cfg) {
    PrecisionScope scope(static_cast<unsigned>(cfg.digits));
    detail::Pipeline P(cfg);
    std::string csv = "E,I,value,log10_value\n";
    Real step = P.step > 0 ? P.step : (P.hi - P.lo) / 200;
    long n = static_cast<long>(ceil((P.hi - P.lo) / step));
    if (n < 8) n = 8;
    for (const long eorder : P.eorders) {
        const EnergyFn fn = P.fn_for(eorder);
        for (long k = 0; k <= n; ++k) {
            const Real e = P.lo + (P.hi - P.lo) * k / n;
            const Real v = fn(e);
            csv += to_exact_string(e) + "," + std::to_string(eorder) + "," + to_exact_string(v) +
                   "," + to_exact_string(log10(v)) + "\n";
        }
    }
    RunOutputs out;
    out.csv_text = std::move(csv);
    if (!cfg.out.empty()) {
        detail::write_output_file(cfg.out, out.csv_text);
        out.csv_path = cfg.out;
    }
    return out;
}

/// Order-by-order tracked minima of the functional in the window.
inline RunOutputs run_minima(const RunConfig& cfg) {
    PrecisionScope scope(static_cast<unsigned>(cfg.digits));
    detail::Pipeline P(cfg);
    detail::Checkpoint ck = detail::Checkpoint::open(cfg.out, cfg.hash(), P.warnings);
    Json wall_ms = Json::object();
    const std::vector<SequencePoint> rows = detail::tracked_minima(P, ck, wall_ms);

    std::string csv = "I,E_min,value,monotone,used_fallback\n";
    Json jrows = Json::array();
    for (const SequencePoint& pt : rows) {
        csv += std::to_string(pt.order) + "," + to_exact_string(pt.energy) + "," +
               to_exact_string(pt.value) + "," + (pt.monotone_up ? "1" : "0") + "," +
               (pt.used_fallback ? "1" : "0") + "\n";
        Json r = detail::point_to_json(pt);
        r["order"] = pt.order;
        jrows.push_back(std::move(r));
    }
    RunOutputs out;
    out.csv_text = std::move(csv);
    out.record = P.base_record("minima");
    out.record["rows"] = std::move(jrows);
    out.record["diagnostics"] = P.diagnostics(wall_ms);
    if (!cfg.out.empty()) {
        detail::write_output_file(cfg.out, out.csv_text);
        out.csv_path = cfg.out;
        out.record_path = cfg.out + ".json";
        detail::write_output_file(out.record_path, out.record.dump(2) + "\n");
        ck.remove();
    }
    return out;
}

/// Tracked minima, then bisected level-set edges around each one under a
/// shared cap taken above the final order's minimum.
inline RunOutputs run_bound(const RunConfig& cfg) {
    PrecisionScope scope(static_cast<unsigned>(cfg.digits));
    detail::Pipeline P(cfg);
    detail::Checkpoint ck = detail::Checkpoint::open(cfg.out, cfg.hash(), P.warnings);
    Json wall_ms = Json::object();
    const std::vector<SequencePoint> rows = detail::tracked_minima(P, ck, wall_ms);

    const Real explicit_cap = cfg.cap.empty() ? Real(0) : parse_real(cfg.cap);
    const Real margin = parse_real(cfg.cap_margin);
    const Real cap = choose_cap(rows.back().value, explicit_cap, margin);
    P.derived["cap"] = to_exact_string(cap);

    std::vector<BoundRecord> brows;
    for (const SequencePoint& pt : rows) {
        const std::string key = std::to_string(pt.order);
        if (ck.enabled && ck.data["bounds"].contains(key)) {
            const Json& j = ck.data["bounds"][key];
            if (parse_real(j.at("cap").get<std::string>()) == cap) {
                BoundRecord rec;
                rec.order = pt.order;
                rec.min_energy = pt.energy;
                rec.min_value = pt.value;
                rec.cap = cap;
                rec.lower = parse_real(j.at("lower").get<std::string>());
                rec.upper = parse_real(j.at("upper").get<std::string>());
                brows.push_back(std::move(rec));
                continue;
            }
        }
        const auto t0 = std::chrono::steady_clock::now();
        const Real step0 = P.step > 0 ? P.step : (P.hi - P.lo) / 200;
        BoundRecord rec = bracket_bounds(P.fn_for(pt.order), pt.order,
                                         Minimum{pt.energy, pt.value}, cap, P.lo, P.hi, step0);
        wall_ms["bound_" + key] = detail::wall_ms_since(t0);
        brows.push_back(rec);
        if (ck.enabled) {
            ck.data["bounds"][key] = Json{{"cap", to_exact_string(cap)},
                                          {"lower", to_exact_string(rec.lower)},
                                          {"upper", to_exact_string(rec.upper)}};
            ck.save();
        }
    }

    std::string csv = "I,E_min,value,cap,lower,upper\n";
    Json jrows = Json::array();
    for (size_t i = 0; i < brows.size(); ++i) {
        const BoundRecord& rec = brows[i];
        csv += std::to_string(rec.order) + "," + to_exact_string(rec.min_energy) + "," +
               to_exact_string(rec.min_value) + "," + to_exact_string(rec.cap) + "," +
               to_exact_string(rec.lower) + "," + to_exact_string(rec.upper) + "\n";
        Json r;
        r["order"] = rec.order;
        r["energy"] = to_exact_string(rec.min_energy);
        r["value"] = to_exact_string(rec.min_value);
        r["cap"] = to_exact_string(rec.cap);
        r["lower"] = to_exact_string(rec.lower);
        r["upper"] = to_exact_string(rec.upper);
        r["monotone"] = rows[i].monotone_up;
        r["fallback"] = rows[i].used_fallback;
        jrows.push_back(std::move(r));
    }
    RunOutputs out;
    out.csv_text = std::move(csv);
    out.record = P.base_record("bound");
    out.record["rows"] = std::move(jrows);
    out.record["diagnostics"] = P.diagnostics(wall_ms);
    if (!cfg.out.empty()) {
        detail::write_output_file(cfg.out, out.csv_text);
        out.csv_path = cfg.out;
        out.record_path = cfg.out + ".json";
        detail::write_output_file(out.record_path, out.record.dump(2) + "\n");
        ck.remove();
    }
    return out;
}

}  // namespace oppq
