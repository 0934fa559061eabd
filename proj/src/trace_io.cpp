#include "ibpg/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "ibpg/errors.hpp"

namespace ibpg {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const TraceRecord& r : trace.records) {
    out << r.k << ',' << format_double(r.fval) << ',' << format_double(r.nfval) << ','
        << format_double(r.mu_measured) << ',' << format_double(r.delta_norm) << ',' << r.inner_iters << ','
        << r.cum_inner_iters << ',' << format_double(r.theta) << ',' << format_double(r.bound_rhs_last) << ','
        << format_double(r.bound_rhs_avg) << '\n';
  }
}

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path) {
  std::ostringstream out;
  write_trace_csv(trace, out);
  write_file_atomic(path, out.str());
}

namespace {

double parse_number(const std::string& tok, const std::filesystem::path& path) {
  if (tok == "nan") return std::nan("");
  if (tok == "inf") return INFINITY;
  if (tok == "-inf") return -INFINITY;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size()) {
    throw InstanceError("trace " + path.string() + ": bad number '" + tok + "'");
  }
  return v;
}

}  // namespace

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InstanceError("cannot open trace " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw InstanceError("trace " + path.string() + ": unexpected header");
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 10) throw InstanceError("trace " + path.string() + ": wrong column count");
    TraceRow r;
    r.k = static_cast<std::size_t>(parse_number(f[0], path));
    r.fval = parse_number(f[1], path);
    r.nfval = parse_number(f[2], path);
    r.mu_measured = parse_number(f[3], path);
    r.delta_norm = parse_number(f[4], path);
    r.inner_iters = static_cast<std::uint64_t>(parse_number(f[5], path));
    r.cum_inner_iters = static_cast<std::uint64_t>(parse_number(f[6], path));
    r.theta = parse_number(f[7], path);
    r.bound_rhs_last = parse_number(f[8], path);
    r.bound_rhs_avg = parse_number(f[9], path);
    rows.push_back(r);
  }
  return rows;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ibpg
