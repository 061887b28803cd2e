#pragma once

// Command-line front end: one subcommand per module operation.

#include <ostream>
#include <string>
#include <vector>

#include "jmcover/geom.hpp"

namespace jmcover::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Builtin name (square, disc, triangle, lshape, cube), inline JSON or a JSON file.
Window parse_window(const std::string& text);

struct BetaGrid {
  double from = 0.0;
  double to = 0.0;
  double step = 0.0;
  std::vector<double> values() const;
};
/// "a:b:step" with a <= b and step > 0.
BetaGrid parse_beta_grid(const std::string& text);

/// "off" -> 0, "grid:h" -> h > 0.
double parse_oracle(const std::string& text);

}  // namespace jmcover::cli
