#include "ssde/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "ssde/errors.hpp"

namespace ssde {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        throw ConfigError("number", "cannot parse '" + text + "'");
    }
    return v;
}

char separator(TableFormat fmt) { return fmt == TableFormat::tsv ? '\t' : ','; }

void write_series(std::ostream& os, const ErrorStats& stats, const std::vector<double>& mu,
                  const std::vector<double>& xi2, TableFormat fmt) {
    const char sep = separator(fmt);
    bool first = true;
    for (const char* col : kSeriesHeader) {
        if (!first) os << sep;
        os << col;
        first = false;
    }
    os << '\n';
    for (std::size_t i = 0; i < stats.times.size(); ++i) {
        os << format_number(stats.times[i]) << sep << format_number(stats.mean_resid[i]) << sep
           << format_number(stats.std_error[i]) << sep << format_number(stats.lln_moment[i]) << sep
           << format_number(stats.clt_moment[i]) << sep << format_number(mu.at(i)) << sep
           << format_number(xi2.at(i)) << '\n';
    }
}

void write_summary(std::ostream& os, const SummaryEntries& entries, TableFormat fmt) {
    const char sep = separator(fmt);
    os << "key" << sep << "value\n";
    for (const auto& [k, v] : entries) os << k << sep << v << '\n';
}

SummaryEntries read_summary(std::istream& is, TableFormat fmt) {
    const char sep = separator(fmt);
    SummaryEntries out;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        const auto pos = line.find(sep);
        if (pos == std::string::npos) throw ConfigError("summary", "malformed line '" + line + "'");
        out.emplace_back(line.substr(0, pos), line.substr(pos + 1));
    }
    return out;
}

} // namespace ssde
