#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "regm/config.hpp"

namespace regm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerdict = 1;
inline constexpr int kExitUsage = 2;

/// fit, ic, onestep, mc-linearity, mc-normality, approx-check, rank-fit
const std::vector<std::string>& commands();

/// Runs one command and writes `config.echo`, CSVs and `report.json` under
/// `out_dir`. Returns 0 on success, 1 when a verdict or the experiment fails
/// and 2 on configuration errors. Messages go to `err`.
int run(const std::string& command, const ExperimentConfig& config, const std::filesystem::path& out_dir,
        std::ostream& err);

/// Command-line entry point.
int main(int argc, char** argv);

}  // namespace regm::cli
