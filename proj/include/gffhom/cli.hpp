#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gffhom {

/// Entry point behind the `gffhom` binary; `args` excludes the program name.
/// Exit codes: 0 success, 1 failed check or runtime error, 2 usage or
/// configuration error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gffhom
