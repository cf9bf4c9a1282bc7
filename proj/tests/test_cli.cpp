#include "robust_snell/cli.hpp"
#include "robust_snell/config.hpp"
#include "robust_snell/errors.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace robust_snell;
namespace fs = std::filesystem;

namespace {

const fs::path kData = ROBUST_SNELL_DATA_DIR;

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "robust_snell_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const auto p = dir / "config.json";
    std::ofstream(p) << text;
    return p;
}

struct Outcome {
    int code;
    std::string err;
};

Outcome invoke(const std::string& command, const fs::path& config, const fs::path& out) {
    std::ostringstream o;
    std::ostringstream e;
    const int code = run({command, "--config", config.string(), "--out", out.string()}, o, e);
    return {code, e.str()};
}

nlohmann::json summary(const fs::path& out) { return nlohmann::json::parse(slurp(out / "summary.json")); }

const char* kEquivalentBoundary = R"({
  "tree": {"horizon": 1, "nodes": [
    {"id": "r", "time": 0, "parent": null, "Y": 0},
    {"id": "a", "time": 1, "parent": "r", "q": 0.3333333333333333, "Y": 2},
    {"id": "b", "time": 1, "parent": "r", "q": 0.3333333333333333, "Y": 0},
    {"id": "c", "time": 1, "parent": "r", "q": 0.3333333333333334, "Y": 1}]},
  "priors": {"node_extremes": {"r": [[2, 1, 0], [0, 1, 2]]}},
  "mode": "equivalent"
})";

} // namespace

TEST_CASE("solve on TT1") {
    const auto out = scratch("solve_tt1");
    REQUIRE(invoke("solve", kData / "tt1.json", out).code == kExitOk);
    const auto s = summary(out);
    CHECK(s["R_root"] == 1.5);
    CHECK(s["U_star_stops"] == nlohmann::json::array({"u", "d"}));
    CHECK(s["certificate"]["optimal"] == true);

    const auto csv = slurp(out / "nodes.csv");
    CHECK(csv.rfind("node_id,time,parent_id,q,state_S,state_hit,Y,R,R_plus,stop,u_star_stop,"
                    "argmax_extreme,z_star,M,C,K,A_q\n",
                    0) == 0);
    std::istringstream lines(csv);
    std::string line;
    int rows = 0;
    while (std::getline(lines, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 16);
        ++rows;
    }
    CHECK(rows == 4);
}

TEST_CASE("oracle on TT4") {
    const auto out = scratch("oracle_tt4");
    REQUIRE(invoke("oracle", kData / "tt4.json", out).code == kExitOk);
    const auto s = summary(out);
    CHECK(s["max_deviation"] == 0.0);
    CHECK(s["random_suite"]["instances"] == 50);
    CHECK(s["random_suite"]["max_deviation"].get<double>() < 1e-9);
}

TEST_CASE("decompose on TT3") {
    const auto out = scratch("decompose_tt3");
    REQUIRE(invoke("decompose", kData / "tt3.json", out).code == kExitOk);
    const auto s = summary(out);
    CHECK(s["C_increasing"] == false);
    CHECK(s["min_delta_C"].get<double>() == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(s["premise"]["holds"] == false);
}

TEST_CASE("price on the TT4 lattice") {
    const auto out = scratch("price_tt4");
    REQUIRE(invoke("price", kData / "crr_tt4.json", out).code == kExitOk);
    const auto s = summary(out);
    CHECK(s["H_S"] == 2.625);
    CHECK(s["vanilla_price"] == 2.625);
    const auto csv = slurp(out / "nodes.csv");
    CHECK(csv.find("dd,2,d,0.5,1,1,4,") != std::string::npos);
}

TEST_CASE("exit codes") {
    SUBCASE("invalid config names the violated invariant") {
        const auto dir = scratch("invalid");
        const auto cfg = write_config(dir, R"({"tree": {"horizon": 1, "nodes": [
            {"id": "r", "time": 0, "parent": null, "Y": 1},
            {"id": "u", "time": 1, "parent": "r", "q": 0.6, "Y": 2},
            {"id": "d", "time": 1, "parent": "r", "q": 0.6, "Y": 0}]}})");
        const auto res = invoke("solve", cfg, dir / "out");
        CHECK(res.code == kExitInvalidConfig);
        CHECK(res.err.find("probabilities sum") != std::string::npos);
    }
    SUBCASE("both tree and crr") {
        const auto dir = scratch("both");
        const auto cfg = write_config(
            dir, R"({"tree": {"horizon": 0, "nodes": [{"id": "r", "time": 0, "parent": null, "Y": 1}]},
                    "crr": {"S0": 4, "up": 2, "down": 0.5, "steps": 1, "rate": 0, "K": 5, "H": 4,
                            "q_up": 0.5, "ambiguity": [0.5, 0.5]}})");
        CHECK(invoke("solve", cfg, dir / "out").code == kExitInvalidConfig);
    }
    SUBCASE("alpha out of range") {
        const auto dir = scratch("alpha");
        auto text = slurp(kData / "tt1.json");
        text.replace(text.find("0.2,"), 4, "1.2,");
        CHECK(invoke("solve", write_config(dir, text), dir / "out").code == kExitInvalidConfig);
    }
    SUBCASE("missing file and unknown command") {
        const auto dir = scratch("missing");
        CHECK(invoke("solve", dir / "nope.json", dir / "out").code == kExitInvalidConfig);
        std::ostringstream o;
        std::ostringstream e;
        CHECK(run({"frobnicate"}, o, e) != kExitOk);
    }
    SUBCASE("size guard") {
        const auto dir = scratch("guard");
        const auto cfg = write_config(dir, R"({"crr": {"S0": 100, "up": 1.1, "down": 0.9, "steps": 8,
            "rate": 0, "K": 100, "H": 95, "q_up": 0.5, "ambiguity": [0.4, 0.6]}})");
        CHECK(invoke("oracle", cfg, dir / "out").code == kExitSizeGuard);
        CHECK(invoke("price", cfg, dir / "out").code == kExitOk);
        const auto deep = write_config(dir, R"({"crr": {"S0": 100, "up": 1.1, "down": 0.9, "steps": 40,
            "rate": 0, "K": 100, "H": 95, "q_up": 0.5, "ambiguity": [0.4, 0.6]}})");
        CHECK(invoke("price", deep, dir / "out").code == kExitSizeGuard);
    }
    SUBCASE("unattained supremum in equivalent mode") {
        const auto dir = scratch("unattained");
        const auto cfg = write_config(dir, kEquivalentBoundary);
        const auto res = invoke("solve", cfg, dir / "out");
        CHECK(res.code == kExitUnattained);
        CHECK(res.err.find("1.3333333333333333") != std::string::npos);
        auto closure = std::string(kEquivalentBoundary);
        closure.replace(closure.find("equivalent"), 10, "closure");
        CHECK(invoke("solve", write_config(dir, closure), dir / "out").code == kExitOk);
    }
}

TEST_CASE("identical config gives byte-identical outputs") {
    for (const char* command : {"solve", "oracle", "decompose"}) {
        for (const char* file : {"tt1.json", "tt3.json", "tt4.json", "tt4_single.json"}) {
            CAPTURE(command);
            CAPTURE(file);
            const auto a = scratch(std::string("det_a_") + command);
            const auto b = scratch(std::string("det_b_") + command);
            REQUIRE(invoke(command, kData / file, a).code == kExitOk);
            REQUIRE(invoke(command, kData / file, b).code == kExitOk);
            CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
            CHECK(slurp(a / "nodes.csv") == slurp(b / "nodes.csv"));
        }
    }
    for (const char* file : {"crr_tt4.json", "crr_barrier.json"}) {
        const auto a = scratch("det_price_a");
        const auto b = scratch("det_price_b");
        REQUIRE(invoke("price", kData / file, a).code == kExitOk);
        REQUIRE(invoke("price", kData / file, b).code == kExitOk);
        CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
        CHECK(slurp(a / "nodes.csv") == slurp(b / "nodes.csv"));
    }
}

TEST_CASE("parse_config") {
    const auto cfg = parse_config(nlohmann::json::parse(slurp(kData / "tt4.json")));
    CHECK(cfg.random_instances == 50);
    CHECK(cfg.seed == 7);
    const auto model = build_model(cfg);
    CHECK(model.tree.size() == 7);
    CHECK(model.priors.extremes(0) == std::vector<DensityVector>{{0.5, 1.5}, {1.5, 0.5}});
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"mode": "closure"})")), InputError);
}
