#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "oppq/oppq.hpp"

namespace {

struct CliFlags {
    std::string config_path;
    std::string digits;
    std::string problem;
    std::vector<std::string> params;  // k=v
    std::string orders;
    std::string window;
    std::string cap;
    std::string cap_margin;
    std::string grid_step;
    std::string out;
    std::string cache_dir;
};

void add_run_flags(CLI::App* sub, CliFlags& f) {
    sub->add_option("--config", f.config_path, "config file (key = value lines)");
    sub->add_option("--digits", f.digits, "working precision in decimal digits");
    sub->add_option("--problem", f.problem, "problem name: harmonic | quartic | qzm");
    sub->add_option("--param", f.params, "problem parameter k=v (repeatable)");
    sub->add_option("--orders", f.orders, "comma-separated order list (qzm: level list)");
    sub->add_option("--window", f.window, "energy window LO:HI");
    sub->add_option("--cap", f.cap, "explicit level cap");
    sub->add_option("--cap-margin", f.cap_margin, "relative cap margin (default 0.10)");
    sub->add_option("--grid-step", f.grid_step, "energy grid step");
    sub->add_option("--out", f.out, "output CSV path (run record goes to PATH.json)");
    sub->add_option("--cache-dir", f.cache_dir, "basis/moment cache directory");
}

oppq::ConfigMap flags_to_map(const CliFlags& f) {
    oppq::ConfigMap m;
    if (!f.digits.empty()) m["digits"] = f.digits;
    if (!f.problem.empty()) m["problem"] = f.problem;
    for (const std::string& kv : f.params) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw oppq::ConfigError("--param needs k=v, got '" + kv + "'");
        m["param." + kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (!f.orders.empty()) m["orders"] = f.orders;
    if (!f.window.empty()) m["window"] = f.window;
    if (!f.cap.empty()) m["cap"] = f.cap;
    if (!f.cap_margin.empty()) m["cap_margin"] = f.cap_margin;
    if (!f.grid_step.empty()) m["grid_step"] = f.grid_step;
    if (!f.out.empty()) m["out"] = f.out;
    if (!f.cache_dir.empty()) m["cache_dir"] = f.cache_dir;
    return m;
}

oppq::RunConfig build_config(const CliFlags& f) {
    oppq::ConfigMap base;
    if (!f.config_path.empty()) base = oppq::load_config_file(f.config_path);
    oppq::RunConfig cfg = oppq::RunConfig::from_map(oppq::merge_config(base, flags_to_map(f)));
    if (cfg.cache_dir.empty())
        if (const char* env = std::getenv("OPPQ_CACHE_DIR")) cfg.cache_dir = env;
    return cfg;
}

void finish_run(const oppq::RunOutputs& out) {
    if (out.csv_path.empty()) {
        std::cout << out.csv_text;
    } else {
        std::cerr << "wrote " << out.csv_path << "\n";
        if (!out.record_path.empty()) std::cerr << "wrote " << out.record_path << "\n";
    }
    if (!out.record.is_null() && out.record.contains("diagnostics")) {
        for (const auto& w : out.record["diagnostics"]["warnings"])
            std::cerr << "warning: " << w.get<std::string>() << "\n";
    }
}

int cmd_cache(const std::string& action, const std::string& dir_flag) {
    std::string dir = dir_flag;
    if (dir.empty())
        if (const char* env = std::getenv("OPPQ_CACHE_DIR")) dir = env;
    if (dir.empty())
        throw oppq::ConfigError("cache command needs --cache-dir or OPPQ_CACHE_DIR");
    oppq::Cache cache(dir);
    if (action == "status") {
        const auto entries = cache.status();
        for (const auto& e : entries)
            std::cout << e.kind << "  digits=" << e.digits << "  " << e.bytes << "B  " << e.file
                      << "  " << e.signature << "\n";
        std::cout << entries.size() << " entries in " << cache.dir().string() << "\n";
    } else if (action == "clear") {
        std::cout << "removed " << cache.purge() << " entries\n";
    } else if (action == "verify") {
        int bad = 0;
        for (const auto& [file, ok] : cache.verify()) {
            std::cout << (ok ? "ok   " : "BAD  ") << file << "\n";
            if (!ok) ++bad;
        }
        std::cout << (bad == 0 ? "all entries verified\n"
                               : std::to_string(bad) + " entries failed verification\n");
    } else {
        throw oppq::ConfigError("unknown cache action '" + action +
                                "' (known: status, clear, verify)");
    }
    for (const auto& w : cache.warnings()) std::cerr << "warning: " << w << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"converging eigenenergy bounds from moment recurrences and "
                 "orthonormal-polynomial projection"};
    app.require_subcommand(1);

    CliFlags scan_flags, minima_flags, bound_flags;
    CLI::App* scan = app.add_subcommand("scan", "functional values on an energy grid");
    add_run_flags(scan, scan_flags);
    CLI::App* minima = app.add_subcommand("minima", "tracked local minima per order");
    add_run_flags(minima, minima_flags);
    CLI::App* bound = app.add_subcommand("bound", "lower/upper bounds from cap level sets");
    add_run_flags(bound, bound_flags);

    std::string cache_action, cache_dir_flag;
    CLI::App* cache = app.add_subcommand("cache", "inspect or clear the table cache");
    cache->add_option("action", cache_action, "status | clear | verify")->required();
    cache->add_option("--cache-dir", cache_dir_flag, "cache directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (scan->parsed()) {
            finish_run(oppq::run_scan(build_config(scan_flags)));
        } else if (minima->parsed()) {
            finish_run(oppq::run_minima(build_config(minima_flags)));
        } else if (bound->parsed()) {
            finish_run(oppq::run_bound(build_config(bound_flags)));
        } else if (cache->parsed()) {
            return cmd_cache(cache_action, cache_dir_flag);
        }
        return 0;
    } catch (const oppq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const oppq::PrecisionError& e) {
        std::cerr << "precision failure: " << e.what() << "\n";
        return 3;
    } catch (const oppq::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const oppq::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
