#ifndef CLOCKSYNC_TOOLS_COMMANDS_H_
#define CLOCKSYNC_TOOLS_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

namespace clocksync::cli {

// Entry point of the `clocksync` tool. `args` excludes the program name.
// Returns the process exit code.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace clocksync::cli

#endif  // CLOCKSYNC_TOOLS_COMMANDS_H_
