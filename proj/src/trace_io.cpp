#include "vrsplit/trace_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "vrsplit/errors.hpp"

namespace vrsplit {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw ConfigError(std::string(what) + " must not contain commas or newlines: '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& s, long line, const char* column) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ParseError(std::string("non-numeric ") + column + " '" + s + "'", line);
  return v;
}

long long parse_int(const std::string& s, long line, const char* column) {
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno != 0) {
    throw ParseError(std::string("non-integer ") + column + " '" + s + "'", line);
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s, long line, const char* column) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || *end != '\0' || errno != 0) {
    throw ParseError(std::string("non-integer ") + column + " '" + s + "'", line);
  }
  return v;
}

void write_rows(const RunTrace& trace, std::ostream& out, bool with_wall) {
  check_field(trace.method, "method");
  check_field(trace.estimator, "estimator");
  check_field(trace.problem, "problem");
  for (const auto& r : trace.rows) {
    out << trace.method << ',' << trace.estimator << ',' << trace.problem << ',' << trace.seed << ','
        << r.oracle_units << ',' << fmt17(r.epochs) << ',' << fmt17(r.rel_residual);
    if (with_wall) out << ',' << fmt17(r.wall_ms);
    out << '\n';
  }
}

}  // namespace

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  write_rows(trace, out, true);
}

void write_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace '" + path + "'");
  write_trace_csv(trace, out);
  if (!out) throw Error("failed writing trace '" + path + "'");
}

RunTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw ParseError("unexpected header '" + line + "'", 1);

  RunTrace trace;
  long lineno = 1;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 8) throw ParseError("expected 8 fields, got " + std::to_string(f.size()), lineno);
    const std::uint64_t seed = parse_uint(f[3], lineno, "seed");
    if (first) {
      trace.method = f[0];
      trace.estimator = f[1];
      trace.problem = f[2];
      trace.seed = seed;
      first = false;
    } else if (f[0] != trace.method || f[1] != trace.estimator || f[2] != trace.problem || seed != trace.seed) {
      throw ParseError("metadata changes within one trace", lineno);
    }
    TraceRow r;
    r.oracle_units = parse_int(f[4], lineno, "oracle_units");
    r.epochs = parse_real(f[5], lineno, "epochs");
    r.rel_residual = parse_real(f[6], lineno, "rel_residual");
    r.wall_ms = parse_real(f[7], lineno, "wall_ms");
    trace.rows.push_back(r);
  }
  return trace;
}

RunTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace '" + path + "'");
  return read_trace_csv(in);
}

std::string numeric_fingerprint(const RunTrace& trace) {
  std::ostringstream out;
  write_rows(trace, out, false);
  return out.str();
}

}  // namespace vrsplit
