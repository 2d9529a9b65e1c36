#pragma once

namespace vpme {

// Exit codes: 0 success, 2 configuration or usage error, 3 convergence failure or abort.
int run_cli(int argc, char** argv);

}  // namespace vpme
