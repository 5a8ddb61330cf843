#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace floodcast {

/// Calendar date (proleptic Gregorian).
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;
};

/// Days since 1970-01-01 (civil-calendar algorithm, valid far outside Unix range).
std::int64_t days_from_date(const Date& d);
Date date_from_days(std::int64_t days);

/// Parse "YYYY-MM-DD" or "YYYYMMDD".
Date parse_date(const std::string& s);
std::string format_date(const Date& d);          // YYYY-MM-DD
std::string format_date_compact(const Date& d);  // YYYYMMDD

/**
 * Dated sequence of daily values at one location (gage discharge in m3/s,
 * or any other daily quantity). Days are contiguous starting at start_day.
 */
struct DailySeries {
    std::int64_t start_day = 0;  // days since 1970-01-01
    std::vector<double> values;

    size_t size() const { return values.size(); }
    Date date(size_t i) const { return date_from_days(start_day + static_cast<std::int64_t>(i)); }
};

/// Read CSV with header `date,discharge_m3s`; enforces strictly daily spacing.
DailySeries read_series_csv(const std::string& path);
void write_series_csv(const DailySeries& s, const std::string& path,
                      const std::string& value_header = "discharge_m3s");

/// Split a CSV line on commas, trimming surrounding whitespace from fields.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace floodcast
