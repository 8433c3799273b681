#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>

namespace divcap {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

/// Writes one comma-separated row of already formatted cells.
void write_row(std::ostream& out, std::initializer_list<std::string_view> cells);

}  // namespace divcap
