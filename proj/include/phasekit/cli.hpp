#pragma once

namespace phasekit {

/// Entry point for the phasekit command-line tool. Exit codes: 0 success,
/// 1 usage error, 2 numerical failure (result files still written).
int cli_main(int argc, const char* const* argv);

}  // namespace phasekit
