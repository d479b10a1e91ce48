#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace modelzip::cli {

// Environment variable naming the default bridge endpoint for `eval`.
inline constexpr const char* kSidecarEnv = "MODELZIP_SIDECAR";

// Exit codes: 0 ok, 1 user error, 2 internal error. Errors are reported as
// one JSON object on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace modelzip::cli
