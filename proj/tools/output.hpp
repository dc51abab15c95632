#pragma once

// Deterministic number formatting and the run manifest shared by all
// commands.

#include <chrono>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace weylscope::cli {

using ojson = nlohmann::ordered_json;

/// %.12g with "-0" printed as "0", "nan" / "inf" spelled out.
std::string format_number(double value);

/// Rounds to 12 significant digits so that JSON dumps match the CSV text;
/// non-finite values become null.
ojson json_number(double value);

class Manifest {
 public:
  Manifest(std::string command, std::string model_source);

  void set(const std::string& key, ojson value) { parameters_[key] = std::move(value); }
  /// Snapshot including the elapsed wall time.
  ojson to_json() const;

 private:
  std::string command_;
  std::string model_;
  ojson parameters_ = ojson::object();
  std::chrono::steady_clock::time_point start_;
};

/// CSV table with '#'-prefixed comment lines ahead of the header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void comment(const std::string& line) { comments_.push_back(line); }
  void row(const std::vector<std::string>& cells) { rows_.push_back(cells); }
  void write(std::ostream& out, const Manifest& manifest) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::vector<std::string>> rows_;
};

void write_json(std::ostream& out, ojson body, const Manifest& manifest);

}  // namespace weylscope::cli
