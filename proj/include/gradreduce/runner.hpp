#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "gradreduce/config.hpp"
#include "gradreduce/errors.hpp"
#include "gradreduce/reduction.hpp"

namespace gradreduce {

/// Process exit status of the CLI.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitContraction = 2,
    kExitAssert = 3,
    kExitNoConvergence = 4,
    kExitBlowUp = 5,
    kExitCfl = 6,
    kExitBoxTooSmall = 7,
    kExitDensity = 8,
    kExitIo = 9,
    kExitInternal = 10,
    kExitUsage = 64,
};

int exit_code_for(ErrorCode code);

/// The reduced model a config describes. `landscape` is what the stochastic
/// and LDP commands integrate: the reduced potential or a table of it.
struct Model {
    BasisPtr basis;
    Potential potential = Potential::zero();
    std::shared_ptr<const ReducedPotential> reduced;
    GradientSystemPtr landscape;
};

Model build_model(const ExperimentConfig& config);

struct RunOptions {
    std::string out_dir; // empty = config.output.directory
    bool check = false;  // --assert
    int workers = 1;
};

struct RunResult {
    int exit_code = kExitOk;
    std::vector<std::string> outputs; // file names relative to the output directory
    std::string manifest_path;
};

const std::vector<std::string>& command_names();

/// Runs one subcommand, writes its CSVs and manifest.json. Library errors
/// propagate as Error; a failed --assert check returns kExitAssert.
RunResult run_command(const std::string& command, const ExperimentConfig& config,
                      const RunOptions& options, std::ostream& log);

/// Re-runs the command recorded in a manifest into `out_dir` and compares
/// every output checksum. Returns kExitOk when all match, kExitAssert otherwise.
int verify_manifest(const std::string& manifest_path, const std::string& out_dir, int workers,
                    std::ostream& log);

/// 17 significant digits, the fixed CSV number format.
std::string format_number(double value);

} // namespace gradreduce
