#include "vcnac/kv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "vcnac/error.hpp"

namespace vcnac {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = s.find(',', pos);
        out.push_back(trim(s.substr(pos, comma == std::string_view::npos ? comma : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
    throw InputError("invalid value for '" + std::string(key) + "': '" + std::string(value) + "'");
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = trim(text.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
        ++line_no;
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw FormatError("line " + std::to_string(line_no) + ": expected key=value");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty key");
        kv[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValues read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str());
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

double parse_double(std::string_view key, std::string_view value) {
    value = trim(value);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
    return v;
}

long long parse_int(std::string_view key, std::string_view value) {
    value = trim(value);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
    return v;
}

std::vector<double> parse_double_list(std::string_view key, std::string_view value) {
    std::vector<double> out;
    for (auto item : split_commas(value)) out.push_back(parse_double(key, item));
    return out;
}

std::vector<long long> parse_int_list(std::string_view key, std::string_view value) {
    std::vector<long long> out;
    for (auto item : split_commas(value)) out.push_back(parse_int(key, item));
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace vcnac
