#include "dcl/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "dcl/error.hpp"

namespace dcl::csv {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::InvalidArgument, "not a number: '" + text + "'");
  }
  return value;
}

void write_trajectory(std::ostream& out, const std::vector<TrajectoryRecord>& rows) {
  out << kHeader << '\n';
  for (const auto& r : rows) {
    out << r.algo << ',' << r.seed << ',' << r.k << ',' << format_double(r.sim_time_ms) << ','
        << format_double(r.rel_error) << ',' << format_double(r.residual) << '\n';
  }
}

std::vector<TrajectoryRecord> read_trajectory(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) fail(ErrorCode::InvalidArgument, "missing trajectory header");
  std::vector<TrajectoryRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) fail(ErrorCode::InvalidArgument, "expected 6 fields: '" + line + "'");
    TrajectoryRecord r;
    r.algo = cells[0];
    try {
      r.seed = std::stoull(cells[1]);
      r.k = std::stol(cells[2]);
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "bad integer field: '" + line + "'");
    }
    r.sim_time_ms = parse_double(cells[3]);
    r.rel_error = parse_double(cells[4]);
    r.residual = parse_double(cells[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace dcl::csv
