// wlevy: command-line front end.
//
//   wlevy <synthesize|verify|invert|lemma-check> --config <path> --out <dir> [--seed <u64>]
//
// Exit codes: 0 ok, 2 invalid input, 3 residual above budget, 4 infeasible.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wienerlevy.hpp"

int main(int argc, char** argv) {
    using namespace wienerlevy;
    CLI::App app{"Wiener-Levy synthesis on measure algebras"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    const std::map<std::string, std::string> about = {
        {"synthesize", "build nu with nu^ ~ h(mu^) on K and check it on sample points"},
        {"verify", "synthesize, then compare against the contour-integral oracle"},
        {"invert", "regularized inverse with threshold eps_inv"},
        {"lemma-check", "coefficient decay and L1 bound diagnostics"}};
    for (const auto& name : command_names()) {
        auto* sub = app.add_subcommand(name, about.at(name));
        sub->add_option("--config", config_path, "job description (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (defaults to the config's \"output\")");
        sub->add_option("--seed", seed, "seed for the verification sample");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::validation);
    }
    const std::string command = app.get_subcommands().front()->get_name();

    JobConfig job;
    try {
        job = load_config(config_path);
    } catch (const ValidationError& e) {
        std::cerr << "wlevy: " << e.what() << "\n";
        return static_cast<int>(ExitCode::validation);
    }
    // synthesize, verify and lemma-check share a config shape; invert does not.
    if ((job.command == "invert") != (command == "invert")) {
        std::cerr << "wlevy: config written for '" << job.command << "' cannot run as '" << command << "'\n";
        return static_cast<int>(ExitCode::validation);
    }
    job.command = command;
    if (seed) job.seed = *seed;
    const std::string dir = out_dir.empty() ? job.output : out_dir;

    const RunOutcome outcome = run_guarded(job, dir);
    (outcome.code == ExitCode::ok ? std::cout : std::cerr) << "wlevy " << command << ": " << outcome.message << "\n";
    return static_cast<int>(outcome.code);
}
