#include "uplink/format.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace uplink {

std::string format_number(double value) {
  if (!std::isfinite(value)) {
    throw std::domain_error("refusing to format non-finite value");
  }
  if (value == 0.0) {
    return "0"; // folds -0
  }
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) {
    throw std::runtime_error("number formatting failed");
  }
  return std::string(buf.data(), ptr);
}

} // namespace uplink
