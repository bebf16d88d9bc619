#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "holeopt/cli_io.hpp"

using namespace holeopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("holeopt_test_" + std::to_string(::getpid())) / name;
    fs::create_directories(p.parent_path());
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    return {std::istreambuf_iterator<char>(f), {}};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

RunConfig small_solve() {
    return parse_config(Json::parse(R"({"domain": {"kind": "disk", "R": 1.0},
                                        "hole": {"center": [0.2, 0.0], "delta": 0.2},
                                        "mesh": {"target_h": 0.06, "refine_factor": 4}})"),
                        "solve");
}

int cli(const std::string& args) {
    const std::string cmd = std::string(HOLEOPT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST(ParseConfig, RejectsUnknownKeys) {
    EXPECT_THROW(parse_config(Json::parse(R"({"mesh": {"target_h": 0.05, "h": 1}})"), "solve"), ConfigError);
    EXPECT_THROW(parse_config(Json::parse(R"({"colour": 1})"), "solve"), ConfigError);
    EXPECT_THROW(parse_config(Json::parse(R"({"domain": {"kind": "disk", "a": 1}})"), "solve"), ConfigError);
    EXPECT_THROW(parse_config(Json::parse(R"({"experiment": "scan"})"), "solve"), ConfigError);
    EXPECT_THROW(parse_config(Json(), "teleport"), ConfigError);
}

TEST(ParseConfig, DomainErrorsAreConfigErrors) {
    EXPECT_THROW(domain_from_json(Json::parse(R"({"kind": "fourier_star", "r0": -1})")), ConfigError);
    EXPECT_THROW(domain_from_json(Json::parse(R"({"kind": "square"})")), ConfigError);
    const auto star = domain_from_json(Json::parse(R"({"kind": "fourier_star", "r0": 1, "modes": [{"k": 2, "a": 0.1}]})"));
    EXPECT_NEAR(star.point(0.0).x, 1.1, 1e-14);
}

TEST(Validate, NegativeDeltaNamesField) {
    RunConfig c = small_solve();
    c.hole.delta = -0.1;
    try {
        validate(c);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("hole.delta"), std::string::npos) << e.what();
    }
}

TEST(Validate, UnknownSuite) {
    RunConfig c;
    c.experiment = "verify";
    c.suite = "everything";
    EXPECT_THROW(validate(c), ConfigError);
    EXPECT_THROW(verify_all("everything"), ConfigError);
}

TEST(ConfigHash, IgnoresOutputLocationAndJobs) {
    RunConfig a = small_solve(), b = small_solve();
    b.out = "/elsewhere";
    b.jobs = 7;
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 64u);
    b.seed = 1;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CsvTable, HeaderAndQuoting) {
    CsvTable t({"a", "b"});
    t.row({"1", "x,y"});
    EXPECT_EQ(t.str(), "a,b\n1,\"x,y\"\n");
}

TEST(Run, SolveBundle) {
    RunConfig c = small_solve();
    c.out = scratch("solve").string();
    const auto b = run(c);
    ASSERT_TRUE(b.summary.contains("lambda1"));
    EXPECT_GT(b.summary["lambda1"].get<double>(), 5.78);
    EXPECT_EQ(b.summary["provenance"]["config_hash"], config_hash(c));
    EXPECT_EQ(b.summary["provenance"]["version"], HOLEOPT_VERSION);
    EXPECT_TRUE(b.summary["provenance"].contains("wall_time_s"));
    const fs::path out(c.out);
    EXPECT_TRUE(fs::exists(out / "summary.json"));
    EXPECT_TRUE(fs::exists(out / "config.json"));
    EXPECT_EQ(first_line(slurp(out / "flux.csv")), "angle,flux");
    const std::string vtk = slurp(out / "mesh.vtk");
    EXPECT_NE(vtk.find("SCALARS boundary_tag"), std::string::npos);
    EXPECT_NE(vtk.find("SCALARS u"), std::string::npos);
    // No temporary directories are left next to the bundle.
    for (const auto& e : fs::directory_iterator(out.parent_path())) {
        EXPECT_EQ(e.path().filename().string().find(".tmp-"), std::string::npos);
    }
    // The stored config reproduces the run.
    const RunConfig again = parse_config(Json::parse(slurp(out / "config.json")), "solve");
    EXPECT_EQ(config_hash(again), config_hash(c));
}

TEST(Run, IdenticalConfigsGiveIdenticalSummaries) {
    RunConfig c = small_solve();
    const fs::path pa = scratch("det_a"), pb = scratch("det_b");
    c.out = pa.string();
    const auto a = run(c);
    c.out = pb.string();
    const auto b = run(c);
    EXPECT_EQ(comparable_summary(a.summary), comparable_summary(b.summary));
    EXPECT_EQ(slurp(pa / "flux.csv"), slurp(pb / "flux.csv"));
}

TEST(Run, OverwritesExistingBundleAtomically) {
    RunConfig c = small_solve();
    c.vtk = false;
    c.out = scratch("overwrite").string();
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "stale.txt") << "old";
    run(c);
    EXPECT_FALSE(fs::exists(fs::path(c.out) / "stale.txt"));
    EXPECT_TRUE(fs::exists(fs::path(c.out) / "summary.json"));
    EXPECT_FALSE(fs::exists(fs::path(c.out) / "mesh.vtk"));
}

TEST(Run, DerivColumns) {
    RunConfig c = parse_config(Json::parse(R"({"hole": {"center": [0.4, 0.0], "delta": 0.1},
                                               "mesh": {"target_h": 0.05},
                                               "deriv": {"theta": 0.3}})"),
                               "deriv");
    c.out = scratch("deriv").string();
    c.vtk = false;
    const auto b = run(c);
    const std::string csv = slurp(fs::path(c.out) / "deriv.csv");
    EXPECT_EQ(first_line(csv), "domain_id,p_x,p_y,delta,theta,arc_top,arc_bottom,arc_sides,total,fd,rel_err");
    EXPECT_GT(b.summary["total"].get<double>(), 0.0);
    EXPECT_LE(b.summary["rel_err"].get<double>(), 0.05);
}

TEST(Run, BlowupRowsHaveCheckColumns) {
    RunConfig c = parse_config(Json::parse(R"({"blowup": {"R": 8, "alpha": 1}, "vtk": true})"), "blowup");
    c.out = scratch("blowup").string();
    run(c);
    EXPECT_EQ(first_line(slurp(fs::path(c.out) / "checks.csv")), "check_id,parameters,statistic,threshold,pass");
    EXPECT_EQ(first_line(slurp(fs::path(c.out) / "blowdown.csv")), "radius,slope,residual,samples");
    EXPECT_NE(slurp(fs::path(c.out) / "k_mesh.vtk").find("SCALARS u"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    const fs::path out = scratch("cli");
    EXPECT_EQ(cli("--version"), 0);
    EXPECT_EQ(cli(""), 2);
    EXPECT_EQ(cli("verify nonsense --out " + (out / "v").string()), 2);
    EXPECT_EQ(cli("solve --config /nonexistent/config.json"), 2);
    const auto bad = write_config("bad.json", R"({"hole": {"delta": -0.1}})");
    EXPECT_EQ(cli("solve --config " + bad.string() + " --out " + (out / "bad").string()), 2);
    const auto unknown = write_config("unknown.json", R"({"holes": {}})");
    EXPECT_EQ(cli("solve --config " + unknown.string() + " --out " + (out / "unknown").string()), 2);

    const auto ok = write_config("ok.json", R"({"hole": {"center": [0.2, 0.0], "delta": 0.2}, "mesh": {"refine_factor": 4}, "vtk": false})");
    EXPECT_EQ(cli("solve --config " + ok.string() + " --h 0.06 --seed 5 --out " + (out / "ok").string()), 0);
    const Json summary = Json::parse(slurp(out / "ok" / "summary.json"));
    EXPECT_TRUE(summary.contains("lambda1"));
    const Json used = Json::parse(slurp(out / "ok" / "config.json"));
    EXPECT_EQ(used["mesh"]["target_h"].get<double>(), 0.06);
    EXPECT_EQ(used["seed"].get<int>(), 5);

    const auto starved = write_config("starved.json", R"({"hole": {"delta": 0.2}, "solver": {"max_iter": 1}, "vtk": false})");
    EXPECT_EQ(cli("solve --config " + starved.string() + " --h 0.1 --out " + (out / "starved").string()), 3);

    // Zero outer data makes the top-integral check fail.
    const auto flat = write_config("flat.json", R"({"blowup": {"alpha": 0}, "vtk": false})");
    EXPECT_EQ(cli("blowup --config " + flat.string() + " --out " + (out / "flat").string()), 4);
}
