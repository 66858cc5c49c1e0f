#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "vrsplit/trace.hpp"

namespace vrsplit {

inline constexpr const char* kTraceHeader =
    "method,estimator,problem,seed,oracle_units,epochs,rel_residual,wall_ms";

/// One line per row; reals printed with 17 significant digits so they read back bit-exactly.
void write_trace_csv(const RunTrace& trace, std::ostream& out);
void write_trace_csv(const RunTrace& trace, const std::string& path);

/// Throws ParseError on a missing header or a malformed field.
RunTrace read_trace_csv(std::istream& in);
RunTrace read_trace_csv(const std::string& path);

/// Same as write_trace_csv without the wall_ms column; used for determinism checks.
std::string numeric_fingerprint(const RunTrace& trace);

}  // namespace vrsplit
