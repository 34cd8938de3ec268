#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace markerlens {

// Dispatches the markerlens subcommands. Returns the process exit code:
// 0 success, 1 domain errors (single `error=<code>` line on out), 2 usage
// errors (usage text on err). Results are `key=value` lines on out; human
// prose goes to err only.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace markerlens
