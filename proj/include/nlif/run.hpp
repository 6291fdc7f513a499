// Experiment dispatch and CSV artifacts. Every CSV starts with a
// `# fingerprint=<hex>` line followed by its header; files are written to a
// temporary name and renamed into place.
#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "nlif/config.hpp"

namespace nlif {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, const std::string& fingerprint,
            const std::vector<std::string>& header);

  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double v);
  CsvWriter& cell(std::int64_t v);
  CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  void end_row();
  /// Renames the temporary file onto `path`.
  std::filesystem::path commit();

 private:
  std::filesystem::path path_;
  std::string body_;
  bool row_open_ = false;
};

/// Runs the configured experiment, writing CSV artifacts and `meta.json`
/// into `out`. Progress lines go to `log` when given. Returns the CSV paths.
std::vector<std::filesystem::path> run_experiment(const RunConfig& config,
                                                  const std::filesystem::path& out,
                                                  std::ostream* log = nullptr);

struct VerifyReport {
  int checked = 0;
  std::vector<std::string> mismatches;  // "<file>: <found fingerprint>"
};

/// Compares the fingerprint line of every CSV in `dir` with `expected`.
VerifyReport verify_artifacts(const std::filesystem::path& dir, const std::string& expected);

}  // namespace nlif
