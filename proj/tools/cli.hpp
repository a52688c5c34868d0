#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nngpiu::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kNumericError = 4,
  kIoError = 5,
};

/// Parsed command line. `command` is one of fit, predict, bench, eigen, rerun.
struct Options {
  std::string command;
  std::string config;
  std::string data;
  std::string model;
  std::string manifest;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0: library default
  bool verbose = false;
};

/// Runs one command and maps library errors onto exit codes. Diagnostics go
/// to stderr.
int run(const Options& options);

/// Parses argv and calls run().
int main_entry(int argc, char** argv);

inline constexpr const char* kManifestName = "manifest.json";

}  // namespace nngpiu::cli
