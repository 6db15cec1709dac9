#include "exspin/numfmt.hpp"

#include <charconv>
#include <cmath>

namespace exspin {

namespace {

// "1.50000000000e-05" -> "1.5e-05"
std::string trim_mantissa(std::string s) {
  const auto e = s.find('e');
  if (e == std::string::npos) return s;
  std::string mantissa = s.substr(0, e);
  if (mantissa.find('.') != std::string::npos) {
    while (mantissa.back() == '0') mantissa.pop_back();
    if (mantissa.back() == '.') mantissa.pop_back();
  }
  return mantissa + s.substr(e);
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[64];
  if (std::abs(x) < 1e-3) {
    const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific, 11);
    return trim_mantissa(std::string(buf, r.ptr));
  }
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 12);
  return trim_mantissa(std::string(buf, r.ptr));
}

std::optional<double> parse_number(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

}  // namespace exspin
