#ifndef DOMINO_CLI_HPP
#define DOMINO_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace domino {

// Entry point shared by the binary and the tests. Exit codes: 0 success
// (valid / all comparisons pass), 1 invalid input, guard violation or failed
// comparison, 2 config parse error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace domino

#endif
