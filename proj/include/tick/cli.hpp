#pragma once

#include <ostream>

namespace tick {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPipelineError = 1;
inline constexpr int kExitUsageError = 2;

/// Entry point of the `tick` command. Pipelines print the new run id on `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tick
