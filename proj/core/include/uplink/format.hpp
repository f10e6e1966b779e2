#pragma once

#include <string>

namespace uplink {

/// Shortest round-trip decimal form, locale independent. Throws
/// std::domain_error on NaN or infinity.
std::string format_number(double value);

} // namespace uplink
