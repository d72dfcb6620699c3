#pragma once

namespace coad::cli {

// Entry point behind the coad binary; exposed so tests can drive the CLI
// in-process. Returns the process exit code: 0 success, 1 runtime failure
// or failed audit, 2 usage error.
int run(int argc, const char* const* argv);

}  // namespace coad::cli
