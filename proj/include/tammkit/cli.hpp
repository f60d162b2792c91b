#ifndef TAMMKIT_CLI_HPP
#define TAMMKIT_CLI_HPP

namespace tammkit {

/// Full command-line dispatch. Exit codes: 0 success, 2 configuration or
/// usage error, 3 numerical/convergence error, 4 I/O error.
int cli_main(int argc, const char* const* argv);

}  // namespace tammkit

#endif
