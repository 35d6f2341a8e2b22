#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "maguq/core.hpp"

namespace maguq::cli {

/// Shortest decimal form that parses back to the same double.
inline std::string csv_num(double v) {
    char buf[40];
    for (int precision : {15, 16, 17}) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string csv_num(int v) { return std::to_string(v); }
inline std::string csv_num(std::int64_t v) { return std::to_string(v); }
inline std::string csv_num(std::uint64_t v) { return std::to_string(v); }

/// CSV file with a comment line echoing the resolved configuration followed
/// by a header row. Numeric cells use full double precision so reruns are
/// byte-identical.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& config_line, const std::string& header)
        : out_(path) {
        if (!out_) throw ConfigError("csv: cannot open " + path + " for writing");
        out_ << "# config: " << config_line << '\n' << header << '\n';
    }

    void raw_line(const std::string& line) { out_ << line << '\n'; }

    template <typename... Cells>
    void row(const Cells&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ","), first = false, write_cell(cells)), ...);
        out_ << '\n';
    }

private:
    void write_cell(const std::string& s) { out_ << s; }
    void write_cell(const char* s) { out_ << s; }
    template <typename T>
    void write_cell(const T& v) {
        out_ << csv_num(v);
    }

    std::ofstream out_;
};

/// Filename-safe tag for a numeric parameter value ("0.2" -> "0p2").
inline std::string value_tag(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    std::string s(buf);
    for (char& c : s) {
        if (c == '.') c = 'p';
        else if (c == '-') c = 'm';
        else if (c == '+') c = '\0';
    }
    std::string out;
    for (char c : s)
        if (c != '\0') out += c;
    return out;
}

}  // namespace maguq::cli
