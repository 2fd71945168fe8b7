#pragma once

// Experiment driver: flat key = value configuration with a typed schema per
// experiment, deterministic runs, and text/CSV report bundles.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fpl/common.hpp"

namespace fpl::experiments {

enum class ParamType { Int, Real, IntList, RealList, Text };

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::Int;
  bool required = false;
  std::string default_value;
  std::string doc;
};

struct Schema {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
};

const std::vector<Schema>& schemas();
const Schema& schema(const std::string& experiment);

/// Raw key = value pairs; '#' starts a comment, blank lines are ignored.
struct Config {
  std::map<std::string, std::string> values;

  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);
};

/// Config validated against a schema, defaults filled in.
class Params {
 public:
  Params(const Schema& schema, const Config& config);

  long get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  std::vector<long> get_int_list(const std::string& key) const;
  std::vector<double> get_real_list(const std::string& key) const;
  const std::string& get_text(const std::string& key) const;
  /// Normalized values in schema order, for echoing into the summary.
  const std::vector<std::pair<std::string, std::string>>& resolved() const { return resolved_; }

 private:
  const std::string& raw(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> resolved_;
};

struct Table {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  std::string experiment;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<Table> tables;
  std::vector<std::pair<std::string, bool>> criteria;

  void add(const std::string& key, double v);
  void add(const std::string& key, long v);
  void add(const std::string& key, int v) { add(key, static_cast<long>(v)); }
  void add(const std::string& key, const std::string& v);
  void add(const std::string& key, const char* v) { add(key, std::string(v)); }
  void add(const std::string& key, bool v);
  void criterion(const std::string& name, bool pass);
  bool all_pass() const;
};

/// %.17g
std::string format_double(double v);

Report run_experiment(const std::string& name, const Config& config, std::uint64_t seed);

/// Writes summary.txt and one CSV per table; WriteFailure on I/O errors or when
/// a target exists and `overwrite` is false.
std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& dir,
                                                bool overwrite);

std::string render_summary(const Report& report);
std::string render_table(const Table& table);

}  // namespace fpl::experiments
