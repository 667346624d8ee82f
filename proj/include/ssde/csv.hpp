#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ssde/montecarlo.hpp"

namespace ssde {

enum class TableFormat { csv, tsv };

/// Shortest decimal that parses back to the same double.
std::string format_number(double v);
double parse_number(const std::string& text);

char separator(TableFormat fmt);

inline constexpr const char* kSeriesHeader[] = {"t",          "mean_resid", "stderr", "lln_moment",
                                                "clt_moment", "mu",         "xi2"};

/// Time series with header t,mean_resid,stderr,lln_moment,clt_moment,mu,xi2.
/// mu and xi2 must be sampled on stats.times.
void write_series(std::ostream& os, const ErrorStats& stats, const std::vector<double>& mu,
                  const std::vector<double>& xi2, TableFormat fmt);

using SummaryEntries = std::vector<std::pair<std::string, std::string>>;

/// Two-column key,value file.
void write_summary(std::ostream& os, const SummaryEntries& entries, TableFormat fmt);
SummaryEntries read_summary(std::istream& is, TableFormat fmt);

} // namespace ssde
