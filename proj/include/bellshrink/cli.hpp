#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bellshrink/shrinkage.hpp"

namespace bellshrink {

// Restriction file: one row of H per line, entries separated by spaces or
// commas, then '|' and the matching entry of h. '#' starts a comment.
LinearRestriction parse_restriction(std::istream& in);
LinearRestriction load_restriction(const std::string& path);

// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bellshrink
