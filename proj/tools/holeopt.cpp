// holeopt command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 verification failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "holeopt/cli_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitVerification = 4;

holeopt::Json load_config(const std::string& path) {
    if (path.empty()) return nullptr;
    std::ifstream f(path);
    if (!f) throw holeopt::ConfigError("--config: cannot open '" + path + "'");
    try {
        return holeopt::Json::parse(f);
    } catch (const holeopt::Json::parse_error& e) {
        throw holeopt::ConfigError("--config: " + std::string(e.what()));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dirichlet eigenvalue of a domain with a circular hole: solve, differentiate, optimize, verify."};
    // --h is the mesh size, so help is long-form only.
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);
    app.set_version_flag("--version", HOLEOPT_VERSION);

    std::string config_path, out;
    std::optional<int> jobs;
    std::optional<double> h;
    std::optional<std::uint64_t> seed;
    std::string suite;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--out", out, "bundle directory (default results/<subcommand>)");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--h", h, "target mesh size");
        sub->add_option("--seed", seed, "mesh generator seed");
    };
    for (const auto& kind : holeopt::experiment_kinds()) {
        CLI::App* sub = app.add_subcommand(kind);
        add_common(sub);
        if (kind == "verify") sub->add_option("suite", suite, "repulsion|bottom|top|sides|barrier|flucher|blowup|all")->required();
    }
    app.get_subcommand("solve")->description("first eigenpair and hole flux");
    app.get_subcommand("deriv")->description("Hadamard derivative, arc split, and finite-difference oracle");
    app.get_subcommand("optimize")->description("projected gradient ascent of the hole centre");
    app.get_subcommand("scan")->description("eigenvalue landscape over a grid of hole centres");
    app.get_subcommand("flucher")->description("small-hole asymptotic fit");
    app.get_subcommand("blowup")->description("harmonic model problem on the truncated blowup domain");
    app.get_subcommand("verify")->description("run a verification suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    std::string kind;
    for (const auto* sub : app.get_subcommands()) kind = sub->get_name();

    try {
        holeopt::RunConfig cfg = holeopt::parse_config(load_config(config_path), kind);
        if (!out.empty()) cfg.out = out;
        if (jobs) cfg.jobs = *jobs;
        if (h) cfg.target_h = *h;
        if (seed) cfg.seed = *seed;
        if (kind == "verify") cfg.suite = suite;
        const holeopt::ResultBundle b = holeopt::run(cfg);
        std::cout << b.summary.dump(2) << '\n';
        std::cout << "bundle: " << b.location.string() << '\n';
        return b.verification_failed ? kExitVerification : kExitOk;
    } catch (const holeopt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}
