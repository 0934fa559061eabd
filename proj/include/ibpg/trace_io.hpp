#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ibpg/solvers.hpp"

namespace ibpg {

/// Column order of the trace CSV.
inline constexpr const char* kTraceHeader =
    "k,fval,nfval,mu_measured,delta_norm,inner_iters,cum_inner_iters,theta,bound_rhs_last,bound_rhs_avg";

/// 17 significant digits, "nan"/"inf" for non-finite values.
std::string format_double(double value);

void write_trace_csv(const RunTrace& trace, std::ostream& out);
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);

/// A row read back from a trace CSV.
struct TraceRow {
  std::size_t k = 0;
  double fval = 0.0;
  double nfval = 0.0;
  double mu_measured = 0.0;
  double delta_norm = 0.0;
  std::uint64_t inner_iters = 0;
  std::uint64_t cum_inner_iters = 0;
  double theta = 1.0;
  double bound_rhs_last = 0.0;
  double bound_rhs_avg = 0.0;
};

/// Throws InstanceError on a malformed file.
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

/// Writes `text` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace ibpg
