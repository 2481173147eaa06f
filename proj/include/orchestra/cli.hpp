#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace orchestra {

/// Entry point for the bubble_orch tool. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace orchestra
