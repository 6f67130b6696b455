#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dcl {

// One trajectory sample as written to the experiment CSV.
struct TrajectoryRecord {
  std::string algo;
  std::uint64_t seed = 0;
  long k = 0;
  double sim_time_ms = 0.0;
  double rel_error = 0.0;
  double residual = 0.0;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

namespace csv {

inline constexpr const char* kHeader = "algo,seed,k,sim_time_ms,rel_error,residual";

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

void write_trajectory(std::ostream& out, const std::vector<TrajectoryRecord>& rows);
// Throws InvalidArgument on a malformed header or row.
std::vector<TrajectoryRecord> read_trajectory(std::istream& in);

}  // namespace csv
}  // namespace dcl
