#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace vrsplit {

/// Exit codes shared by the command line front end.
enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

struct RunCommandOptions {
  std::string config_path;
  std::optional<std::string> out_dir;  // overrides the config's "output"
  unsigned threads = 0;                // 0: VRSPLIT_THREADS or hardware concurrency
};

/// Loads a JSON experiment config and checks every field and parameter gate without running.
/// Throws ConfigError naming the offending field.
void validate_config_file(const std::string& path);

/// One CSV trace per (method, seed, instance) plus manifest.json in the output directory.
int cmd_run(const RunCommandOptions& options, std::ostream& log);

struct ValidateOptions {
  std::uint64_t seed = 0;
  double beta_bar_scale = 1.0;  // mutation hook: scales the beta_bar used by the residual-inequality check
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CheckResult> run_validation(const ValidateOptions& options);

/// Prints one PASS/FAIL line per check; exit code 1 if any failed.
int cmd_validate(const ValidateOptions& options, std::ostream& out);

struct MethodSummary {
  std::string method;
  std::string estimator;
  double final_mean = 0.0;
  double final_std = 0.0;
  double auc_log = 0.0;          // mean over runs of the trapezoid integral of log10(rel) over epochs
  double epochs_to_1e_2 = 0.0;   // mean first epoch with rel <= 1e-2; inf if some run never gets there
  int runs = 0;
};

inline constexpr const char* kSummaryHeader = "method,estimator,final_mean,final_std,auc_log,epochs_to_1e-2";

/// Groups the manifest's traces by (method, estimator), in order of first appearance.
std::vector<MethodSummary> summarize_manifest(const std::string& manifest_path);

/// Prints the table and writes summary.csv beside the manifest (or to `csv_path`).
int cmd_compare(const std::string& manifest_path, const std::optional<std::string>& csv_path, std::ostream& out);

/// Number of worker threads: explicit value, else VRSPLIT_THREADS, else hardware concurrency.
unsigned resolve_thread_count(unsigned requested);

/// FNV-1a 64-bit digest as 16 hex characters.
std::string digest_hex(const std::string& bytes);

}  // namespace vrsplit
