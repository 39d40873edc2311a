#include "dtmac/config_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "dtmac/error.hpp"

namespace dtmac {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

int bracket_depth(const std::string& text) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '"' && (i == 0 || text[i - 1] != '\\')) in_string = !in_string;
    if (in_string) continue;
    if (text[i] == '[') ++depth;
    if (text[i] == ']') --depth;
  }
  return depth;
}

template <typename T>
std::string format_list(const std::vector<T>& values);

std::string format_value(double v) { return format_double(v); }
std::string format_value(int v) { return std::to_string(v); }

template <typename T>
std::string format_value(const std::vector<T>& v) {
  return format_list(v);
}

template <typename T>
std::string format_list(const std::vector<T>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_value(values[i]);
  }
  return out + "]";
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  std::string s(buf, res.ptr);
  // Keep integral doubles readable as reals.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

ConfigFile ConfigFile::parse(std::string_view text, const std::string& source) {
  ConfigFile file;
  file.source_ = source;
  static const std::regex section_re(R"(^\[([A-Za-z_][A-Za-z0-9_.-]*)\]$)");
  static const std::regex key_re(R"(^([A-Za-z_][A-Za-z0-9_.-]*)\s*=\s*(.*)$)");
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  std::string pending_key;
  std::string pending_value;
  int pending_line = 0;
  int line_no = 0;
  auto finish = [&]() {
    if (!json::accept(pending_value))
      throw ConfigError(source + ":" + std::to_string(pending_line) + ": cannot parse value of '" + pending_key + "'");
    file.set_raw(section, pending_key, pending_value);
    pending_key.clear();
    pending_value.clear();
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string content = trim(strip_comment(line));
    if (!pending_key.empty()) {
      pending_value += ' ' + content;
      if (bracket_depth(pending_value) <= 0) finish();
      continue;
    }
    if (content.empty()) continue;
    std::smatch m;
    if (std::regex_match(content, m, section_re)) {
      section = m[1];
      if (!file.entries_.count(section)) {
        file.section_order_.push_back(section);
        file.entries_[section];
      }
      continue;
    }
    if (!std::regex_match(content, m, key_re))
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value' or '[section]'");
    if (section.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": key outside of a section");
    pending_key = m[1];
    pending_value = trim(m[2].str());
    pending_line = line_no;
    if (pending_value.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": missing value");
    if (bracket_depth(pending_value) <= 0) finish();
  }
  if (!pending_key.empty())
    throw ConfigError(source + ":" + std::to_string(pending_line) + ": unterminated value of '" + pending_key + "'");
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto it = entries_.find(section);
  if (it == entries_.end()) return false;
  for (const auto& [k, v] : it->second)
    if (k == key) return true;
  return false;
}

std::vector<std::string> ConfigFile::sections() const { return section_order_; }

std::vector<std::string> ConfigFile::keys(const std::string& section) const {
  std::vector<std::string> out;
  const auto it = entries_.find(section);
  if (it != entries_.end())
    for (const auto& [k, v] : it->second) out.push_back(k);
  return out;
}

const std::string& ConfigFile::raw(const std::string& section, const std::string& key) const {
  const auto it = entries_.find(section);
  if (it != entries_.end())
    for (const auto& [k, v] : it->second)
      if (k == key) return v;
  throw ConfigError(source_ + ": missing key '" + key + "' in [" + section + "]");
}

namespace {

template <typename T>
T typed(const std::string& source, const std::string& section, const std::string& key, const std::string& raw) {
  try {
    return json::parse(raw).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(source + ": [" + section + "] " + key + " has the wrong type");
  }
}

}  // namespace

int ConfigFile::get_int(const std::string& s, const std::string& k) const {
  const auto j = json::parse(raw(s, k));
  if (!j.is_number_integer()) throw ConfigError(source_ + ": [" + s + "] " + k + " must be an integer");
  return j.get<int>();
}

long long ConfigFile::get_int64(const std::string& s, const std::string& k) const {
  const auto j = json::parse(raw(s, k));
  if (!j.is_number_integer()) throw ConfigError(source_ + ": [" + s + "] " + k + " must be an integer");
  return j.get<long long>();
}

double ConfigFile::get_double(const std::string& s, const std::string& k) const {
  const auto j = json::parse(raw(s, k));
  if (!j.is_number()) throw ConfigError(source_ + ": [" + s + "] " + k + " must be a number");
  return j.get<double>();
}

bool ConfigFile::get_bool(const std::string& s, const std::string& k) const {
  return typed<bool>(source_, s, k, raw(s, k));
}
std::string ConfigFile::get_string(const std::string& s, const std::string& k) const {
  return typed<std::string>(source_, s, k, raw(s, k));
}
std::vector<int> ConfigFile::get_int_list(const std::string& s, const std::string& k) const {
  return typed<std::vector<int>>(source_, s, k, raw(s, k));
}
std::vector<double> ConfigFile::get_double_list(const std::string& s, const std::string& k) const {
  return typed<std::vector<double>>(source_, s, k, raw(s, k));
}
std::vector<std::string> ConfigFile::get_string_list(const std::string& s, const std::string& k) const {
  return typed<std::vector<std::string>>(source_, s, k, raw(s, k));
}
std::vector<std::vector<int>> ConfigFile::get_int_matrix(const std::string& s, const std::string& k) const {
  return typed<std::vector<std::vector<int>>>(source_, s, k, raw(s, k));
}
std::vector<std::vector<double>> ConfigFile::get_double_matrix(const std::string& s, const std::string& k) const {
  return typed<std::vector<std::vector<double>>>(source_, s, k, raw(s, k));
}
std::vector<std::vector<std::vector<double>>> ConfigFile::get_double_tensor3(const std::string& s,
                                                                             const std::string& k) const {
  return typed<std::vector<std::vector<std::vector<double>>>>(source_, s, k, raw(s, k));
}

void ConfigFile::set_raw(const std::string& section, const std::string& key, const std::string& value_text) {
  if (!entries_.count(section)) section_order_.push_back(section);
  auto& entries = entries_[section];
  for (auto& [k, v] : entries)
    if (k == key) {
      v = value_text;
      return;
    }
  entries.emplace_back(key, value_text);
}

void ConfigFile::set(const std::string& s, const std::string& k, double v) { set_raw(s, k, format_double(v)); }
void ConfigFile::set(const std::string& s, const std::string& k, int v) { set_raw(s, k, std::to_string(v)); }
void ConfigFile::set(const std::string& s, const std::string& k, const std::string& v) {
  set_raw(s, k, json(v).dump());
}
void ConfigFile::set(const std::string& s, const std::string& k, const std::vector<double>& v) {
  set_raw(s, k, format_list(v));
}
void ConfigFile::set(const std::string& s, const std::string& k, const std::vector<int>& v) {
  set_raw(s, k, format_list(v));
}
void ConfigFile::set(const std::string& s, const std::string& k, const std::vector<std::vector<double>>& v) {
  set_raw(s, k, format_list(v));
}
void ConfigFile::set(const std::string& s, const std::string& k, const std::vector<std::vector<int>>& v) {
  set_raw(s, k, format_list(v));
}
void ConfigFile::set(const std::string& s, const std::string& k,
                     const std::vector<std::vector<std::vector<double>>>& v) {
  set_raw(s, k, format_list(v));
}

std::string ConfigFile::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < section_order_.size(); ++i) {
    if (i) out += '\n';
    out += '[' + section_order_[i] + "]\n";
    for (const auto& [k, v] : entries_.at(section_order_[i])) out += k + " = " + v + '\n';
  }
  return out;
}

void ConfigFile::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_string();
}

SystemConfig system_config_from(const ConfigFile& file) {
  SystemConfig config;
  config.num_devices = file.get_int("system", "devices");
  for (auto cluster : file.get_int_matrix("system", "clusters")) {
    for (auto& k : cluster) k -= 1;
    config.clusters.push_back(std::move(cluster));
  }
  config.q_max = file.get_int_list("system", "q_max");
  config.dynamics.generation = file.get_double_tensor3("system", "generation");
  config.dynamics.mpr = file.get_double_matrix("system", "mpr");
  config.beta = file.get_double_list("system", "beta");
  config.xi = file.get_double("system", "xi");
  config.gamma = file.get_double("system", "gamma");
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(file.source() + ": " + e.what());
  }
  return config;
}

void write_system_config(ConfigFile& file, const SystemConfig& config) {
  file.set("system", "devices", config.num_devices);
  std::vector<std::vector<int>> clusters = config.clusters;
  for (auto& c : clusters)
    for (auto& k : c) k += 1;
  file.set("system", "clusters", clusters);
  file.set("system", "q_max", config.q_max);
  file.set("system", "generation", config.dynamics.generation);
  file.set("system", "mpr", config.dynamics.mpr);
  file.set("system", "beta", config.beta);
  file.set("system", "xi", config.xi);
  file.set("system", "gamma", config.gamma);
}

PosteriorModel posterior_from(const ConfigFile& file, const SystemConfig& config) {
  PosteriorModel posterior;
  for (auto& table : file.get_double_tensor3("posterior", "generation_alpha"))
    posterior.generation.push_back(DirichletTable{std::move(table)});
  posterior.mpr.alpha = file.get_double_matrix("posterior", "mpr_alpha");
  // Same shapes as a prior for this system, all entries positive.
  const auto shape = init_prior(config, 1.0);
  auto same_shape = [](const DirichletTable& a, const DirichletTable& b) {
    if (a.alpha.size() != b.alpha.size()) return false;
    for (std::size_t i = 0; i < a.alpha.size(); ++i) {
      if (a.alpha[i].size() != b.alpha[i].size()) return false;
      for (const double v : a.alpha[i])
        if (!(v > 0.0) || !std::isfinite(v)) return false;
    }
    return true;
  };
  bool ok = posterior.generation.size() == shape.generation.size() && same_shape(posterior.mpr, shape.mpr);
  for (std::size_t i = 0; ok && i < shape.generation.size(); ++i)
    ok = same_shape(posterior.generation[i], shape.generation[i]);
  if (!ok) throw ConfigError(file.source() + ": [posterior] tables do not match the system structure");
  return posterior;
}

void write_posterior(ConfigFile& file, const PosteriorModel& posterior) {
  std::vector<std::vector<std::vector<double>>> generation;
  for (const auto& t : posterior.generation) generation.push_back(t.alpha);
  file.set("posterior", "generation_alpha", generation);
  file.set("posterior", "mpr_alpha", posterior.mpr.alpha);
}

}  // namespace dtmac
