#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vcnac {

// Flat key=value text. Blank lines and lines starting with '#' are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::string& path);
std::string format_key_values(const KeyValues& kv);

double parse_double(std::string_view key, std::string_view value);
long long parse_int(std::string_view key, std::string_view value);
std::vector<double> parse_double_list(std::string_view key, std::string_view value);
std::vector<long long> parse_int_list(std::string_view key, std::string_view value);

std::string format_double(double v);

}  // namespace vcnac
