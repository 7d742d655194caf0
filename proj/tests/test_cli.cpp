#include "catch_amalgamated.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "oppq/run.hpp"
#include "oppq/serialize.hpp"

using namespace oppq;
namespace fs = std::filesystem;

#ifndef OPPQ_CLI_PATH
#define OPPQ_CLI_PATH "../tools/oppq"
#endif

namespace {

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& name) : path(fs::path("cli_scratch") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
};

std::string run_cmd(const std::string& cmd, int& rc) {
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    const int status = pclose(pipe);
    rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

RunConfig harmonic_cfg(const std::string& out_path) {
    RunConfig cfg;
    cfg.problem = "harmonic";
    cfg.digits = 40;
    cfg.orders = {6, 8};
    cfg.window_lo = "3";
    cfg.window_hi = "6";
    cfg.grid_step = "0.05";
    cfg.out = out_path;
    return cfg;
}

Json without_diagnostics(Json j) {
    j.erase("diagnostics");
    return j;
}

}  // namespace

TEST_CASE("grid sweeps report every requested order") {
    ScratchDir dir("scan");
    RunConfig cfg = harmonic_cfg("");
    cfg.grid_step = "0.5";
    const RunOutputs out = run_scan(cfg);
    REQUIRE(out.csv_text.rfind("E,I,value,log10_value\n", 0) == 0);
    REQUIRE(out.csv_text.find(",6,") != std::string::npos);
    REQUIRE(out.csv_text.find(",8,") != std::string::npos);
    REQUIRE(out.record.is_null());
    REQUIRE(out.csv_path.empty());
}

TEST_CASE("repeated runs produce byte-identical tables and records") {
    ScratchDir dir("determinism");
    const RunOutputs a = run_minima(harmonic_cfg((dir.path / "a.csv").string()));
    const RunOutputs b = run_minima(harmonic_cfg((dir.path / "b.csv").string()));
    REQUIRE(read_file(dir.path / "a.csv") == read_file(dir.path / "b.csv"));
    REQUIRE(a.csv_text == b.csv_text);

    const Json ja = Json::parse(read_file(dir.path / "a.csv.json"));
    const Json jb = Json::parse(read_file(dir.path / "b.csv.json"));
    REQUIRE(without_diagnostics(ja).dump() == without_diagnostics(jb).dump());
    REQUIRE(ja.contains("diagnostics"));  // timing lives only here
    REQUIRE(ja["config_hash"] == harmonic_cfg("x").hash());
    REQUIRE(ja["rows"].size() == 2);
}

TEST_CASE("interrupted bound runs resume from the checkpoint bit for bit") {
    ScratchDir dir("resume");
    const std::string out_path = (dir.path / "run.csv").string();
    const RunConfig cfg = harmonic_cfg(out_path);

    const RunOutputs first = run_bound(cfg);
    const std::string csv1 = read_file(out_path);
    const Json rec1 = Json::parse(read_file(out_path + ".json"));
    REQUIRE_FALSE(fs::exists(out_path + ".ckpt"));  // finished runs clean up

    // Simulate a run that died after the first order: re-seed its checkpoint.
    const Json& row0 = rec1["rows"][0];
    Json ck{{"format", "oppq-ckpt-v1"},
            {"config_hash", cfg.hash()},
            {"minima",
             {{"6",
               {{"energy", row0["energy"]},
                {"value", row0["value"]},
                {"monotone", row0["monotone"]},
                {"fallback", row0["fallback"]}}}}},
            {"bounds",
             {{"6",
               {{"cap", row0["cap"]}, {"lower", row0["lower"]}, {"upper", row0["upper"]}}}}}};
    fs::remove(out_path);
    fs::remove(out_path + ".json");
    write_file_atomic(out_path + ".ckpt", ck.dump(2) + "\n");

    const RunOutputs second = run_bound(cfg);
    REQUIRE(read_file(out_path) == csv1);
    const Json rec2 = Json::parse(read_file(out_path + ".json"));
    REQUIRE(without_diagnostics(rec1).dump() == without_diagnostics(rec2).dump());
    // The first order came from the checkpoint, so only the second was timed.
    const Json& wall = rec2["diagnostics"]["wall_ms"];
    REQUIRE_FALSE(wall.contains("minima_6"));
    REQUIRE_FALSE(wall.contains("bound_6"));
    REQUIRE(wall.contains("minima_8"));
    REQUIRE(wall.contains("bound_8"));
    REQUIRE_FALSE(fs::exists(out_path + ".ckpt"));
}

TEST_CASE("checkpoints from a different configuration are ignored with a warning") {
    ScratchDir dir("stale");
    const std::string out_path = (dir.path / "run.csv").string();
    Json stale{{"format", "oppq-ckpt-v1"},
               {"config_hash", "0000000000000000"},
               {"minima", Json::object()},
               {"bounds", Json::object()}};
    write_file_atomic(out_path + ".ckpt", stale.dump(2) + "\n");

    const RunOutputs out = run_minima(harmonic_cfg(out_path));
    bool warned = false;
    for (const auto& w : out.record["diagnostics"]["warnings"])
        if (w.get<std::string>().find("checkpoint") != std::string::npos) warned = true;
    REQUIRE(warned);
    REQUIRE(out.record["rows"].size() == 2);  // computed fresh all the same
}

TEST_CASE("run layer reuses cached bases across processes and orders") {
    ScratchDir dir("cache_reuse");
    RunConfig cfg = harmonic_cfg((dir.path / "a.csv").string());
    cfg.cache_dir = (dir.path / "cache").string();
    const RunOutputs a = run_minima(cfg);
    REQUIRE(a.record["diagnostics"]["cache_builds"].get<int>() == 1);
    REQUIRE(a.record["diagnostics"]["cache_hits"].get<int>() == 0);

    cfg.out = (dir.path / "b.csv").string();
    const RunOutputs b = run_minima(cfg);
    REQUIRE(b.record["diagnostics"]["cache_builds"].get<int>() == 0);
    REQUIRE(b.record["diagnostics"]["cache_hits"].get<int>() == 1);
    REQUIRE(a.csv_text == b.csv_text);

    cfg.out = (dir.path / "c.csv").string();
    cfg.orders = {6};  // smaller order served by the stored superset
    const RunOutputs c = run_minima(cfg);
    REQUIRE(c.record["diagnostics"]["cache_hits"].get<int>() == 1);
}

TEST_CASE("command line: argument errors exit with the config status") {
    int rc = 0;
    run_cmd(std::string(OPPQ_CLI_PATH) + " 2>&1", rc);
    REQUIRE(rc == 2);  // a subcommand is required

    run_cmd(std::string(OPPQ_CLI_PATH) + " scan --problem nosuch --digits 40 --orders 4"
            " --window 3:6 2>&1", rc);
    REQUIRE(rc == 2);

    run_cmd(std::string(OPPQ_CLI_PATH) + " minima --problem harmonic --digits 40 --orders 4"
            " 2>&1", rc);
    REQUIRE(rc == 2);  // missing window

    run_cmd(std::string(OPPQ_CLI_PATH) + " bound --problem harmonic --digits 5 --orders 4"
            " --window 3:6 2>&1", rc);
    REQUIRE(rc == 2);  // precision below the working floor
}

TEST_CASE("command line: grid sweep prints tables to stdout") {
    int rc = -1;
    const std::string out = run_cmd(std::string(OPPQ_CLI_PATH) +
                                    " scan --problem harmonic --digits 34 --orders 4"
                                    " --window 4:6 --grid-step 0.25 2>/dev/null", rc);
    REQUIRE(rc == 0);
    REQUIRE(out.rfind("E,I,value,log10_value\n", 0) == 0);
    REQUIRE(out.find("\n") != std::string::npos);
}

TEST_CASE("command line: file output goes to disk, chatter to stderr") {
    ScratchDir dir("cli_out");
    const std::string out_path = (dir.path / "b.csv").string();
    int rc = -1;
    const std::string err = run_cmd(std::string(OPPQ_CLI_PATH) +
                                    " bound --problem harmonic --digits 40 --orders 6,8"
                                    " --window 3:6 --grid-step 0.05 --out " + out_path +
                                    " 2>&1 1>/dev/null", rc);
    REQUIRE(rc == 0);
    REQUIRE(err.find("wrote " + out_path) != std::string::npos);
    REQUIRE(err.find("wrote " + out_path + ".json") != std::string::npos);
    REQUIRE(fs::exists(out_path));
    const std::string csv = read_file(out_path);
    REQUIRE(csv.rfind("I,E_min,value,cap,lower,upper\n", 0) == 0);
    const Json rec = Json::parse(read_file(out_path + ".json"));
    REQUIRE(rec["command"] == "bound");
    REQUIRE(rec["rows"].size() == 2);
}

TEST_CASE("command line: config files merge under explicit flags") {
    ScratchDir dir("cli_config");
    const std::string conf_path = (dir.path / "run.conf").string();
    write_file_atomic(conf_path,
                      "# sweep setup\n"
                      "problem = harmonic\n"
                      "digits = 34\n"
                      "orders = 4\n"
                      "window = 4:6\n"
                      "grid_step = 0.5\n");
    int rc = -1;
    const std::string out = run_cmd(std::string(OPPQ_CLI_PATH) + " scan --config " + conf_path +
                                    " --grid-step 0.25 2>/dev/null", rc);
    REQUIRE(rc == 0);
    REQUIRE(out.rfind("E,I,value,log10_value\n", 0) == 0);

    const std::string none = run_cmd(std::string(OPPQ_CLI_PATH) + " scan --config " +
                                     (dir.path / "missing.conf").string() + " 2>&1", rc);
    REQUIRE(rc == 5);  // unreadable config file is an io error
}

TEST_CASE("command line: cache inspection round trip") {
    ScratchDir dir("cli_cache");
    const std::string cache_dir = (dir.path / "cache").string();
    const std::string base = std::string(OPPQ_CLI_PATH);
    int rc = -1;

    std::string out = run_cmd(base + " cache status --cache-dir " + cache_dir + " 2>&1", rc);
    REQUIRE(rc == 0);
    REQUIRE(out.find("0 entries") != std::string::npos);

    run_cmd(base + " minima --problem harmonic --digits 40 --orders 6 --window 3:6"
            " --grid-step 0.1 --cache-dir " + cache_dir + " --out " + (dir.path / "m.csv").string() +
            " 2>&1", rc);
    REQUIRE(rc == 0);

    out = run_cmd(base + " cache status --cache-dir " + cache_dir + " 2>&1", rc);
    REQUIRE(rc == 0);
    REQUIRE(out.find("basis") != std::string::npos);
    REQUIRE(out.find("1 entries") != std::string::npos);

    out = run_cmd(base + " cache verify --cache-dir " + cache_dir + " 2>&1", rc);
    REQUIRE(rc == 0);
    REQUIRE(out.find("all entries verified") != std::string::npos);

    out = run_cmd(base + " cache clear --cache-dir " + cache_dir + " 2>&1", rc);
    REQUIRE(rc == 0);
    REQUIRE(out.find("removed 1") != std::string::npos);

    out = run_cmd(base + " cache nonsense --cache-dir " + cache_dir + " 2>&1", rc);
    REQUIRE(rc == 2);

    out = run_cmd("env -u OPPQ_CACHE_DIR " + base + " cache status 2>&1", rc);
    REQUIRE(rc == 2);  // no directory given anywhere

    out = run_cmd("env OPPQ_CACHE_DIR=" + cache_dir + " " + base + " cache status 2>&1", rc);
    REQUIRE(rc == 0);  // environment fallback works
}
