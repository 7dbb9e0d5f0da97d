#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gfss/cli/config.hpp"

namespace gfss::cli {

enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kUsageError = 2 };

// Output file names inside the --out directory.
inline constexpr const char* kDatasetFile = "dataset.gfss";
inline constexpr const char* kCheckpointFile = "checkpoint.gfss";
inline constexpr const char* kHistoryFile = "history.csv";
inline constexpr const char* kSummaryFile = "summary.txt";
inline constexpr const char* kReportCsv = "report.csv";
inline constexpr const char* kReportText = "report.txt";
std::string table_file(std::size_t shots);  // table_<k>shot.csv
std::string class_file(std::size_t shots);  // classes_<k>shot.csv

// The commands throw ConfigError on invalid input (before writing anything)
// and other exceptions on runtime failure. run() maps both to exit codes.

/// Writes the dataset described by `config` to `out_path`.
void cmd_gen_data(const ExperimentConfig& config, const std::filesystem::path& out_path);

/// Pretrains (ViT encoders, when enabled), base-trains and writes checkpoint,
/// history CSV and a key=value summary to `out_dir`.
void cmd_base_train(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Few-shot evaluation of a base-trained checkpoint. Writes the table row CSV
/// and the per-class CSV; optional PNG previews for the first run.
void cmd_adapt_eval(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                    const std::filesystem::path& out_dir, bool emit_pngs);

/// Concatenates table CSVs; writes report.csv and report.txt and returns the text.
std::string cmd_report(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out_dir);

/// Key=value lines of a summary file.
std::map<std::string, std::string> read_summary(const std::filesystem::path& path);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args exclude the program name

}  // namespace gfss::cli
