#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dtmac/bayes.hpp"
#include "dtmac/system.hpp"

namespace dtmac {

// Sectioned key/value text file:
//
//   # comment
//   [system]
//   devices = 4
//   clusters = [[1, 2], [3, 4]]
//
// Values are numbers, quoted strings, booleans or (nested) arrays of those.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, const std::string& source = "<string>");
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;

  int get_int(const std::string& section, const std::string& key) const;
  long long get_int64(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::vector<int> get_int_list(const std::string& section, const std::string& key) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& section, const std::string& key) const;
  std::vector<std::vector<int>> get_int_matrix(const std::string& section, const std::string& key) const;
  std::vector<std::vector<double>> get_double_matrix(const std::string& section, const std::string& key) const;
  std::vector<std::vector<std::vector<double>>> get_double_tensor3(const std::string& section,
                                                                   const std::string& key) const;

  // Stores `value_text` verbatim; it must parse as a value.
  void set_raw(const std::string& section, const std::string& key, const std::string& value_text);
  void set(const std::string& section, const std::string& key, double value);
  void set(const std::string& section, const std::string& key, int value);
  void set(const std::string& section, const std::string& key, const std::string& value);
  void set(const std::string& section, const std::string& key, const std::vector<double>& value);
  void set(const std::string& section, const std::string& key, const std::vector<int>& value);
  void set(const std::string& section, const std::string& key, const std::vector<std::vector<double>>& value);
  void set(const std::string& section, const std::string& key, const std::vector<std::vector<int>>& value);
  void set(const std::string& section, const std::string& key,
           const std::vector<std::vector<std::vector<double>>>& value);

  std::string to_string() const;
  void save(const std::filesystem::path& path) const;

  const std::string& source() const { return source_; }

 private:
  const std::string& raw(const std::string& section, const std::string& key) const;

  std::string source_;
  std::vector<std::string> section_order_;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> entries_;
};

// Round-trip decimal formatting shared by every text writer.
std::string format_double(double value);

// [system] section. Cluster members are 1-based in the file.
SystemConfig system_config_from(const ConfigFile& file);
void write_system_config(ConfigFile& file, const SystemConfig& config);

// [posterior] section holding the concentration tables.
PosteriorModel posterior_from(const ConfigFile& file, const SystemConfig& config);
void write_posterior(ConfigFile& file, const PosteriorModel& posterior);

}  // namespace dtmac
