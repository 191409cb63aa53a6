#ifndef ORBEX_CLI_HPP
#define ORBEX_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace orbex::cli {

inline constexpr const char* config_schema = "orbex-config/1";
inline constexpr const char* report_schema = "orbex-report/1";
inline constexpr const char* tool_version = "0.1.0";

enum ExitCode { Ok = 0, InvalidConfig = 2, RuntimeFailure = 3 };

// args excludes the program name. The report goes to the configured output
// path, or to `out` when none is set; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace orbex::cli

#endif
