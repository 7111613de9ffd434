#include "phasekit/cli.hpp"

int main(int argc, char** argv) { return phasekit::cli_main(argc, argv); }
