#pragma once

#include <string>
#include <vector>

namespace opuq {

/// Entry point of the `opuq` binary; args excludes the program name.
/// Returns 0 on success, 1 for configuration errors (bad flags, outputs that
/// already exist without --force), 2 for runtime failures. On success stdout
/// carries exactly one line: the path of the primary artifact.
int cli_main(const std::vector<std::string>& args);

}  // namespace opuq
