#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "renorm/cli.hpp"
#include "renorm/error.hpp"

using namespace renorm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("renormlab-test-" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "renormlab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("theta specifications") {
    const auto g = cli::parse_theta("golden:2");
    CHECK(g.terms.size() == 60);
    CHECK(g.terms.front() == 2);
    CHECK(!g.infinite);

    const auto c = cli::parse_theta("cf:1,2,3,inf");
    CHECK(c.terms == std::vector<std::int64_t>{1, 2, 3});
    CHECK(c.infinite);

    const auto r = cli::parse_theta(" rational:5/12 ");
    CHECK(r.terms == std::vector<std::int64_t>{2, 2, 2});
    CHECK(r.infinite);

    for (const char* bad : {"golden:", "golden:0", "golden:x", "cf:", "cf:1,0", "cf:1,,2", "rational:3/2",
                            "rational:1", "rational:0/5", "phi", "foo:1", "1/2"})
        CHECK_THROWS_AS(cli::parse_theta(bad), Error);
}

TEST_CASE("config text and key validation") {
    const auto kv = cli::parse_config_text("# comment\n\nsamples = 20000  # inline\n  seed=3\n");
    CHECK(kv.size() == 2);
    CHECK(kv.at("samples") == "20000");
    CHECK(kv.at("seed") == "3");
    CHECK_THROWS_AS(cli::parse_config_text("a = 1\na = 2\n"), Error);
    CHECK_THROWS_AS(cli::parse_config_text("novalue\n"), Error);
    CHECK_THROWS_AS(cli::parse_config_text(" = 3\n"), Error);

    // defaults, then file, then overrides
    const auto cfg = cli::make_config("julia-area", {{"samples", "20000"}, {"seed", "3"}}, {{"seed", "4"}});
    CHECK(cfg.integer("samples") == 20000);
    CHECK(cfg.integer("seed") == 4);
    CHECK(cfg.integer("maxiter") == 10000);
    CHECK(cfg.integers("j") == std::vector<std::int64_t>{1, 2, 3, 4});
    CHECK(cfg.get("out_dir") == "out");

    CHECK_THROWS_AS(cli::make_config("julia-area", {{"bogus", "1"}}, {}), Error);
    CHECK_THROWS_AS(cli::make_config("julia-area", {{"samples", "1.5"}}, {}), Error);
    CHECK_THROWS_AS(cli::make_config("julia-area", {}, {{"seed", "abc"}}), Error);
    CHECK_THROWS_AS(cli::make_config("spectrum", {{"experiment", "julia-area"}}, {}), Error);
    CHECK_THROWS_AS(cli::make_config("nope", {}, {}), Error);
    CHECK_NOTHROW(cli::make_config("spectrum", {{"experiment", "spectrum"}}, {}));
    for (const auto& e : cli::experiments()) CHECK_NOTHROW(cli::make_config(e, {}, {}));
}

TEST_CASE("sha256 test vectors") {
    CHECK(cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("tune-blaschke writes its table and manifest") {
    const auto out = scratch("tune");
    REQUIRE(run_cli({"tune-blaschke", "--theta", "golden:1", "--out_dir", out.string()}) == cli::kOk);
    const auto rows = lines(slurp(out / "tune.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].rfind("theta_spec,theta,tau,rho,residual", 0) == 0);
    CHECK(rows[1].rfind("golden:1,0.6180339887498", 0) == 0);

    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(m["experiment"] == "tune-blaschke");
    CHECK(m["version"] == cli::kVersion);
    CHECK(m["config"]["theta"] == "golden:1");
    REQUIRE(m["files"].size() == 1);
    CHECK(m["files"][0]["name"] == "tune.csv");
    CHECK(m["files"][0]["sha256"] == cli::sha256_hex(slurp(out / "tune.csv")));
    CHECK(m["files"][0]["bytes"] == fs::file_size(out / "tune.csv"));
}

TEST_CASE("config errors exit 2 and write nothing") {
    const auto out = scratch("bad");
    CHECK(run_cli({"tune-blaschke", "--theta", "golden:x", "--out_dir", out.string()}) == cli::kConfigError);
    CHECK(!fs::exists(out));
    CHECK(run_cli({"no-such-experiment", "--out_dir", out.string()}) == cli::kConfigError);
    CHECK(run_cli({"julia-area", "--bogus", "1", "--out_dir", out.string()}) == cli::kConfigError);
    CHECK(run_cli({"julia-area", "--samples", "--out_dir", out.string()}) == cli::kConfigError);
    CHECK(run_cli({"julia-area", "stray", "--out_dir", out.string()}) == cli::kConfigError);
    CHECK(run_cli({"spectrum", "--theta", "golden:2", "--out_dir", out.string()}) == cli::kConfigError);
    CHECK(run_cli({"julia-area", "--config", (out / "missing.cfg").string()}) == cli::kConfigError);
    CHECK(!fs::exists(out));

    // unwritable output path: a regular file where the directory should be
    const auto base = scratch("blocked");
    fs::create_directories(base);
    std::ofstream(base / "file") << "x";
    CHECK(run_cli({"gauss-expansion", "--out_dir", (base / "file" / "sub").string()}) == cli::kConfigError);
}

TEST_CASE("budget exhaustion exits 4") {
    const auto out = scratch("budget");
    CHECK(run_cli({"siegel-scaling", "--budget", "1000", "--out_dir", out.string()}) == cli::kBudgetError);
    CHECK(run_cli({"tune-blaschke", "--theta", "golden:1", "--budget", "100", "--out_dir", out.string()}) ==
          cli::kBudgetError);
    CHECK(!fs::exists(out));
}

TEST_CASE("config file with command-line overrides") {
    const auto dir = scratch("cfgfile");
    fs::create_directories(dir);
    std::ofstream(dir / "area.cfg") << "# small run\nexperiment = julia-area\nsamples = 10000\nmaxiter = 200\nj = 1,2\n";
    REQUIRE(run_cli({"julia-area", "--config", (dir / "area.cfg").string(), "--seed=9", "--out-dir",
                     (dir / "out").string()}) == cli::kOk);
    const auto rows = lines(slurp(dir / "out" / "area.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "j,theta_j,theta_inf,estimate,stderr,samples,hits,seed,maxiter");
    CHECK(rows[1].rfind("1,0.5,", 0) == 0);
    CHECK(rows[1].find(",10000,") != std::string::npos);
    CHECK(rows[1].substr(rows[1].size() - 6) == ",9,200");
}

TEST_CASE("row-count contracts") {
    const auto out = scratch("rows");
    REQUIRE(run_cli({"renorm-converge", "--out_dir", (out / "rc").string()}) == cli::kOk);
    CHECK(lines(slurp(out / "rc" / "converge.csv")).size() == 1 + 9);

    REQUIRE(run_cli({"boundary-export", "--m", "10000", "--out_dir", (out / "be").string()}) == cli::kOk);
    const auto rows = lines(slurp(out / "be" / "boundary.csv"));
    CHECK(rows.size() == 1 + 10001);
    CHECK(rows[1].substr(rows[1].find(',', rows[1].find(',') + 1)) ==
          rows.back().substr(rows.back().find(',', rows.back().find(',') + 1)));

    REQUIRE(run_cli({"gauss-expansion", "--out_dir", (out / "ge").string()}) == cli::kOk);
    CHECK(lines(slurp(out / "ge" / "gauss.csv")).size() == 1 + 10);
    CHECK(lines(slurp(out / "ge" / "convergents.csv")).size() == 1 + 25);
    CHECK(lines(slurp(out / "ge" / "golden_identity.csv")).size() == 1 + 10);
}

TEST_CASE("spectrum JSON") {
    const auto out = scratch("spec");
    REQUIRE(run_cli({"spectrum", "--d", "12", "--h", "1e-5", "--out_dir", out.string()}) == cli::kOk);
    const auto j = nlohmann::json::parse(slurp(out / "spectrum.json"));
    REQUIRE(j["runs"].size() == 1);
    const auto& run = j["runs"][0];
    CHECK(run["d"] == 12);
    REQUIRE(run["by_h"].size() == 1);
    const auto& r = run["by_h"][0]["restricted"];
    CHECK(r["unstable"] == 1);
    CHECK(r["eigenvalues"][0].size() == 2);
    CHECK(r["moduli"][0].get<double>() > 2.5);
}

TEST_CASE("reruns are byte-identical, with and without the orbit cache") {
    const auto base = scratch("det");
    const std::vector<std::vector<std::string>> runs{
        {"tune-blaschke", "--theta", "golden:2"},
        {"renorm-tower", "--theta", "golden:1", "--levels", "4", "--partition_levels", "6"},
        {"siegel-scaling", "--budget", "100000", "--levels", "12"},
        {"renorm-converge", "--depth", "8"},
        {"universality", "--depths", "6"},
        {"gauss-expansion"},
        {"spectrum", "--d", "8", "--h", "1e-5"},
        {"julia-area", "--samples", "10000", "--maxiter", "300"},
        {"boundary-density", "--samples", "10000", "--maxiter", "300"},
        {"boundary-export", "--m", "2000"},
    };
    int k = 0;
    for (const auto& args : runs) {
        std::vector<std::string> digests[3];
        for (int rep = 0; rep < 3; ++rep) {
            auto a = args;
            const auto dir = base / (std::to_string(k) + "-" + std::to_string(rep));
            a.insert(a.end(), {"--out_dir", dir.string()});
            if (rep > 0) a.insert(a.end(), {"--cache_dir", (base / "cache").string()});
            REQUIRE(run_cli(a) == cli::kOk);
            const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
            for (const auto& f : m["files"]) digests[rep].push_back(f["sha256"]);
        }
        INFO(args[0]);
        CHECK(!digests[0].empty());
        CHECK(digests[0] == digests[1]);
        CHECK(digests[1] == digests[2]);
        ++k;
    }
    // the orbit cache was populated and uses the documented layout
    bool found = false;
    for (const auto& e : fs::directory_iterator(base / "cache")) {
        if (e.path().filename().string().rfind("orbit-", 0) != 0) continue;
        found = true;
        CHECK(lines(slurp(e.path())).front() == "k,re,im");
    }
    CHECK(found);
}
