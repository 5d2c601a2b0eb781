#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cowrite {

// Reads one RFC 4180 record. Quoted fields may hold commas, doubled quotes
// and newlines. `line` is advanced past every physical newline consumed.
// Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line);

std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace cowrite
