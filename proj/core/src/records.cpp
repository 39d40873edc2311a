#include "dtmac/records.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dtmac/config_file.hpp"
#include "dtmac/error.hpp"

namespace dtmac {

namespace {

std::string header(int num_devices) {
  std::string h = "t";
  for (const char field : {'q', 'g', 'd', 'a'})
    for (int k = 1; k <= num_devices; ++k) h += "," + std::string(1, field) + std::to_string(k);
  return h + ",reward";
}

void write_row(std::ostream& out, int t, const SystemState& s, const JointAction* a, const double* r) {
  out << t;
  for (const auto& o : s.devices) out << ',' << o.q;
  for (const auto& o : s.devices) out << ',' << o.g;
  for (const auto& o : s.devices) out << ',' << o.d;
  if (a) {
    for (const auto bit : *a) out << ',' << int(bit);
    out << ',' << format_double(*r);
  } else {
    for (std::size_t k = 0; k < s.size(); ++k) out << ',';
    out << ',';
  }
  out << '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

int parse_int(const std::string& cell, std::size_t row) {
  int v = 0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
    throw RecordError(row, "expected an integer, got '" + cell + "'");
  return v;
}

double parse_real(const std::string& cell, std::size_t row) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (cell.empty() || used != cell.size()) throw RecordError(row, "expected a number, got '" + cell + "'");
  return v;
}

}  // namespace

void write_trajectory(std::ostream& out, const Trajectory& trajectory, int num_devices) {
  out << header(num_devices) << '\n';
  const auto& data = trajectory.transitions;
  for (std::size_t i = 0; i < data.size(); ++i)
    write_row(out, trajectory.t0 + int(i), data[i].state, &data[i].action, &trajectory.rewards.at(i));
  if (!data.empty()) write_row(out, trajectory.t0 + int(data.size()), data.back().next_state, nullptr, nullptr);
}

Trajectory read_trajectory(std::istream& in, int num_devices) {
  const std::size_t K = std::size_t(num_devices);
  std::string line;
  if (!std::getline(in, line)) throw RecordError(0, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header(num_devices)) throw RecordError(0, "unexpected header '" + line + "'");

  struct Row {
    int t;
    SystemState state;
    bool has_action;
    JointAction action;
    double reward;
  };
  std::vector<Row> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 4 * K + 2)
      throw RecordError(line_no, "expected " + std::to_string(4 * K + 2) + " fields, got " +
                                     std::to_string(cells.size()));
    Row row{parse_int(cells[0], line_no), empty_state(num_devices), false, {}, 0.0};
    for (std::size_t k = 0; k < K; ++k) {
      row.state[k].q = parse_int(cells[1 + k], line_no);
      row.state[k].g = parse_int(cells[1 + K + k], line_no);
      row.state[k].d = parse_int(cells[1 + 2 * K + k], line_no);
      if (row.state[k].q < 0 || row.state[k].g < 0 || row.state[k].g > 1 || row.state[k].d < 0 ||
          row.state[k].d > 1)
        throw RecordError(line_no, "observation out of range");
    }
    bool all_empty = cells.back().empty();
    for (std::size_t k = 0; k < K; ++k) all_empty = all_empty && cells[1 + 3 * K + k].empty();
    if (!all_empty) {
      row.has_action = true;
      for (std::size_t k = 0; k < K; ++k) {
        const int a = parse_int(cells[1 + 3 * K + k], line_no);
        if (a != 0 && a != 1) throw RecordError(line_no, "action must be 0 or 1");
        row.action.push_back(std::uint8_t(a));
      }
      row.reward = parse_real(cells.back(), line_no);
    }
    if (!rows.empty()) {
      if (!rows.back().has_action) throw RecordError(line_no, "row follows a terminal row");
      if (row.t != rows.back().t + 1) throw RecordError(line_no, "slot indices must be consecutive");
    }
    rows.push_back(std::move(row));
  }

  Trajectory trajectory;
  if (rows.empty()) return trajectory;
  if (rows.back().has_action) throw RecordError(rows.size(), "last row must be terminal (no action)");
  trajectory.t0 = rows.front().t;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    trajectory.transitions.push_back({rows[i].state, rows[i].action, rows[i + 1].state});
    trajectory.rewards.push_back(rows[i].reward);
  }
  return trajectory;
}

bool is_chained(const Dataset& dataset) {
  for (std::size_t i = 0; i + 1 < dataset.size(); ++i)
    if (dataset[i].next_state != dataset[i + 1].state) return false;
  return true;
}

}  // namespace dtmac
