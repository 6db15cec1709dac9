#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace exspin {

/// 12 significant digits; scientific notation when 0 < |x| < 1e-3.
std::string format_number(double x);

/// Whole-token decimal parse (no leading/trailing junk); nullopt on failure.
std::optional<double> parse_number(std::string_view text);

}  // namespace exspin
