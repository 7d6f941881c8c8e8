#pragma once

// Minimal CSV plumbing shared by the export/import surfaces. Output is
// UTF-8 with a header row, '.' decimal separator, and a fixed %.12g float
// format so identical runs emit identical bytes.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "twinbeam/errors.hpp"

namespace twinbeam::csv {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    return in;
}

inline std::vector<std::string> split_line(const std::string& line, char sep = ',') {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep)) fields.push_back(field);
    return fields;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("cannot parse '" + s + "' as a number (" + context + ")");
    }
}

}  // namespace twinbeam::csv
