#pragma once

#include <string>
#include <vector>

namespace wfc::cli {

/// Command dispatch: list | emit | doc | verify.
/// Returns 0 on success, 1 on verification failure, 2 on usage errors.
int run(const std::vector<std::string>& args);

}  // namespace wfc::cli
