#pragma once

#include <string>

namespace nngpiu {

// Thin wrappers over the library's spdlog logger (writes to stderr).
void set_verbose(bool verbose);
void log_info(const std::string& message);
void log_warn(const std::string& message);
void log_debug(const std::string& message);

}  // namespace nngpiu
