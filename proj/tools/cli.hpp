#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spikelab::cli {

enum ExitCode { ok = 0, usage = 2, numerical = 3 };

/// Entry point shared by the executable and the tests. args excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spikelab::cli
