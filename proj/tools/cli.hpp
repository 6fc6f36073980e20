// Command-line front end. One binary with verb subcommands:
//
//   sample-params  draw camera parameter sets (JSONL)
//   distort        render an image through a camera's distortion
//   undistort      remove a camera's distortion from an image
//   gen-grid       straight-line grid test pattern
//   gen-dataset    distorted images plus annotations and manifest
//   split          train/val/test record files from a manifest
//   eval           mean error map and line-profile summary of predictions
//   report         min/max table from one or more summary CSV files
//
// Exit codes: 0 success, 2 usage, I/O, configuration or geometry errors,
// 3 numeric failures (exhausted displacement budget, non-convergence).
// Diagnostics go to the error stream only.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bcdk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace bcdk::cli
