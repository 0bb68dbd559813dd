#include "doctest.h"

#include "cavity/cli/app.hpp"
#include "cavity/cli/manifest.hpp"
#include "cavity/cli/params.hpp"
#include "cavity/cli/pool.hpp"
#include "cavity/digest.hpp"
#include "cavity/format.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "json.hpp"

using namespace cavity;
using namespace cavity::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("cavity-test-" + std::to_string(::getpid()) + "-" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "cavity");
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<ParamSpec> schema() {
    return {{"delta", ParamType::real, "0", "detuning"},
            {"nbar", ParamType::integer, "10", "photons"},
            {"model", ParamType::text, "fock-pair", "model"},
            {"spectrum", ParamType::boolean, "false", "all exponents"}};
}

}  // namespace

TEST_CASE("doubles round-trip through 17 significant digits") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 94.24777960769379}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(100.0) == "100");
}

TEST_CASE("sha256 of a known message") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    TempDir dir;
    spit(dir / "f", "abc");
    CHECK(sha256_file(dir / "f") == sha256_hex("abc"));
    CHECK_THROWS(sha256_file(dir / "missing"));
}

TEST_CASE("parameter precedence: default, then file, then flag") {
    ParameterSet p(schema());
    CHECK(p.real("delta") == 0.0);
    CHECK(p.provenance("delta") == Provenance::default_value);
    p.load_text("# comment\n\ndelta = 0.4   # trailing\nmodel = \"semiclassical\"\n", "run.cfg");
    CHECK(p.real("delta") == 0.4);
    CHECK(p.text("model") == "semiclassical");
    CHECK(p.provenance("delta") == Provenance::file);
    p.set_flag("delta", "0.5");
    CHECK(p.real("delta") == 0.5);
    CHECK(p.provenance("delta") == Provenance::flag);
    CHECK(p.provenance("nbar") == Provenance::default_value);
    CHECK(p.provenance_json()["delta"] == "flag");
}

TEST_CASE("an empty file leaves the documented defaults") {
    ParameterSet p(schema());
    p.load_text("", "empty.cfg");
    CHECK(p.integer("nbar") == 10);
    CHECK(p.boolean("spectrum") == false);
}

TEST_CASE("config errors name the key and the place") {
    ParameterSet p(schema());
    try {
        p.load_text("delta = 0.4\ndetla = 0.5\n", "run.cfg");
        FAIL("typo accepted");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "detla");
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("run.cfg:2") != std::string::npos);
    }
    try {
        p.load_text("nbar = ten\n", "run.cfg");
        FAIL("bad integer accepted");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "nbar");
        CHECK(std::string(e.what()).find("integer") != std::string::npos);
    }
    CHECK_THROWS_AS(p.load_text("[section]\n", "run.cfg"), ConfigError);
    CHECK_THROWS_AS(p.load_text("delta = 1\ndelta = 2\n", "run.cfg"), ConfigError);
    CHECK_THROWS_AS(p.set_flag("spectrum", "maybe"), ConfigError);
    CHECK_THROWS_AS(p.set_flag("nbar", "1.5"), ConfigError);
}

TEST_CASE("thread pool visits every index exactly once and forwards exceptions") {
    std::vector<std::atomic<int>> hits(1000);
    thread_pool_for(4)(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(thread_pool_for(3)(50, [](std::size_t i) {
        if (i == 17) throw std::runtime_error("boom");
    }),
                    std::runtime_error);
    CHECK(default_jobs() >= 1);
}

TEST_CASE("cli: unknown subcommands, flags and bad values are usage errors") {
    CHECK(invoke({}).code == usage_error);
    CHECK(invoke({"fly"}).code == usage_error);
    const auto typo = invoke({"simulate", "--detla", "1"});
    CHECK(typo.code == usage_error);
    const auto j = nlohmann::json::parse(typo.err);
    CHECK(j["error"]["kind"] == "usage");

    TempDir dir;
    CHECK(invoke({"simulate", "--zin", "1.5", "--out", dir / "x.csv"}).code == usage_error);
    const auto layer = invoke({"lyapunov", "--delta", "0", "--layer-width", "true", "--out", dir / "l.csv"});
    CHECK(layer.code == usage_error);
    CHECK(layer.err.find("delta = 0") != std::string::npos);
    const auto bad = invoke({"simulate", "--nbar", "x", "--out", dir / "x.csv"});
    CHECK(bad.code == usage_error);
    CHECK(nlohmann::json::parse(bad.err)["error"]["key"] == "nbar");
    CHECK(invoke({"simulate", "--help"}).code == ok);
    CHECK(invoke({"--version"}).code == ok);
}

TEST_CASE("cli: unwritable output is a runtime failure") {
    const auto r = invoke({"simulate", "--tau", "1", "--out", "/nonexistent-dir/x.csv"});
    CHECK(r.code == runtime_failure);
    CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "io");
}

TEST_CASE("cli: config file, flag precedence and manifest") {
    TempDir dir;
    spit(dir / "run.cfg", "delta = 0.4\ntau = 2\ndt = 0.5\n");
    const auto r = invoke({"simulate", "--config", dir / "run.cfg", "--delta", "0.5", "--out", dir / "t.csv"});
    REQUIRE(r.code == ok);
    const auto m = nlohmann::json::parse(slurp(dir / "t.csv.manifest.json"));
    CHECK(m["command"] == "simulate");
    CHECK(m["parameters"]["delta"] == 0.5);
    CHECK(m["provenance"]["delta"] == "flag");
    CHECK(m["provenance"]["tau"] == "file");
    CHECK(m["provenance"]["alpha"] == "default");
    CHECK(m["outputs"][0]["sha256"] == sha256_file(dir / "t.csv"));
    CHECK(m["inputs"][0]["sha256"] == sha256_file(dir / "run.cfg"));
    CHECK(slurp(dir / "t.csv").find("# delta: 0.5") != std::string::npos);

    const auto typo = invoke({"simulate", "--config", (spit(dir / "bad.cfg", "detla = 1\n"), dir / "bad.cfg")});
    CHECK(typo.code == usage_error);
    CHECK(nlohmann::json::parse(typo.err)["error"]["key"] == "detla");
}

TEST_CASE("cli: rerunning from a manifest reproduces the outputs byte for byte") {
    TempDir dir;
    REQUIRE(invoke({"scan-exit", "--p0", "60:70:5", "--out", dir / "a.csv", "--jobs", "1"}).code == ok);
    REQUIRE(invoke({"scan-exit", "--config", dir / "a.csv.manifest.json", "--out", dir / "b.csv", "--jobs", "3"}).code ==
            ok);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    // a manifest from another command is refused
    CHECK(invoke({"simulate", "--config", dir / "a.csv.manifest.json", "--out", dir / "c.csv"}).code == usage_error);
}

TEST_CASE("cli: resonant exit scan obeys the closed form") {
    TempDir dir;
    REQUIRE(invoke({"scan-exit", "--delta", "0", "--alpha", "1e-3", "--p0", "10:200:40", "--out", dir / "e.csv"}).code ==
            ok);
    std::istringstream in(slurp(dir / "e.csv"));
    std::string line;
    int rows = 0;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        const double p0 = std::stod(line.substr(0, line.find(',')));
        const double T = std::stod(line.substr(line.find(',') + 1));
        CHECK(T == doctest::Approx(3 * M_PI / (2e-3 * p0)).epsilon(1e-6));
        ++rows;
    }
    CHECK(rows == 40);
}

TEST_CASE("cli: analysis commands write fit reports") {
    TempDir dir;
    REQUIRE(invoke({"scan-exit", "--delta", "0.4", "--p0", "64.1:64.6:200", "--out", dir / "e.csv"}).code == ok);
    REQUIRE(invoke({"analyze-fractal", "--input", dir / "e.csv", "--out", dir / "f.json"}).code == ok);
    const auto f = nlohmann::json::parse(slurp(dir / "f.json"));
    CHECK(f["report"]["estimator"] == "box-counting dimension");
    CHECK(f["reference_dimension_semiclassical"] == 1.84);
    const double d = f["report"]["value"];
    CHECK(d > 1.0);
    CHECK(d < 2.0);
    const auto m = nlohmann::json::parse(slurp(dir / "f.json.manifest.json"));
    CHECK(m["inputs"][0]["sha256"] == sha256_file(dir / "e.csv"));

    CHECK(invoke({"analyze-fractal", "--out", dir / "g.json"}).code == usage_error);

    REQUIRE(invoke({"analyze-diffusion", "--ensemble", "100", "--tau", "50", "--out", dir / "d.json"}).code == ok);
    const auto dj = nlohmann::json::parse(slurp(dir / "d.json"));
    CHECK(dj["transport"]["estimator"] == "transport exponent mu");
}

TEST_CASE("cli: lyapunov and doppler summaries") {
    TempDir dir;
    REQUIRE(invoke({"lyapunov", "--delta", "0.4", "--zin", "0.99", "--tau-total", "500", "--out", dir / "l.csv"}).code == ok);
    const auto s = nlohmann::json::parse(slurp(dir / "l.json"));
    CHECK(s["spectrum"].size() == 1);
    CHECK(s.contains("predictability_horizon"));
    CHECK(slurp(dir / "l.csv").find("tau,lambda") != std::string::npos);

    REQUIRE(invoke({"doppler", "--tau", "5", "--out", dir / "d.csv"}).code == ok);
    CHECK(slurp(dir / "d.csv").find("# closed_form_frequency:") != std::string::npos);
}
