// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace strokefield::cli {

/// Exit codes: 0 ok, 1 usage/validation error, 2 IO error, 3 gradient check failed.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace strokefield::cli
