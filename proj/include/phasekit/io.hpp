#pragma once

#include "phasekit/signal.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace phasekit {

struct Observation;  // forward.hpp

// Flat binary signal format: magic "PKSG", version u8, ndim u8, dims as
// 64-bit little-endian unsigned, then interleaved re/im as 64-bit
// little-endian floats, row-major. Files may hold several records
// back-to-back (e.g. one per measurement vector or dictionary atom).

void write_signal(std::ostream& os, const Signal& s);
void write_signal_file(const std::string& path, const Signal& s);
void write_signals_file(const std::string& path, const std::vector<Signal>& sigs);

Signal read_signal(std::istream& is);
Signal read_signal_file(const std::string& path);
std::vector<Signal> read_signals_file(const std::string& path);

// CSV text form for small fixtures: header "i,re,im" (1D) or "i,j,re,im" (2D).
void write_signal_csv(const std::string& path, const Signal& s);
Signal read_signal_csv(const std::string& path);

// Observation CSV: header "i,y,valid" or "i,j,y,valid"; dims and noise
// metadata are carried in leading comment lines.
void write_observation_csv(const std::string& path, const Observation& obs);
Observation read_observation_csv(const std::string& path);

}  // namespace phasekit
