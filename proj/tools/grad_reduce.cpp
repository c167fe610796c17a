// grad-reduce: command-line front end of the reduction / stochastic / LDP pipeline.
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gradreduce/config.hpp"
#include "gradreduce/parallel.hpp"
#include "gradreduce/runner.hpp"

using namespace gradreduce;

int main(int argc, char** argv) {
    CLI::App app{"Exact finite reduction of gradient reaction-diffusion systems and their "
                 "small-noise large deviations"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool check = false;
    for (const std::string& name : command_names()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
        sub->add_flag("--assert", check, "exit 3 when the command's checks fail");
    }
    std::string manifest_path;
    CLI::App* verify = app.add_subcommand("verify", "re-run a manifest and compare checksums");
    verify->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
    verify->add_option("--out", out_dir, "directory for the re-run (default <manifest dir>/verify)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    const int workers = default_workers();
    try {
        if (verify->parsed()) {
            if (out_dir.empty())
                out_dir = (std::filesystem::path(manifest_path).parent_path() / "verify").string();
            return verify_manifest(manifest_path, out_dir, workers, std::cout);
        }
        const std::string command = app.get_subcommands().front()->get_name();
        const ExperimentConfig config = load_config(config_path);
        RunOptions options;
        options.out_dir = out_dir;
        options.check = check;
        options.workers = workers;
        const RunResult result = run_command(command, config, options, std::cout);
        std::cout << "wrote " << result.outputs.size() << " files and " << result.manifest_path << "\n";
        return result.exit_code;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}
