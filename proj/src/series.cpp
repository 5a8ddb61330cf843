#include "floodcast/series.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace floodcast {

// Howard Hinnant's days-from-civil algorithm.
std::int64_t days_from_date(const Date& d) {
    int y = d.year;
    int m = d.month;
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m > 2 ? m - 3 : m + 9) + 2u) / 5u + d.day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date date_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

Date parse_date(const std::string& s) {
    Date d;
    if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
        d.year = std::stoi(s.substr(0, 4));
        d.month = std::stoi(s.substr(5, 2));
        d.day = std::stoi(s.substr(8, 2));
    } else if (s.size() == 8) {
        d.year = std::stoi(s.substr(0, 4));
        d.month = std::stoi(s.substr(4, 2));
        d.day = std::stoi(s.substr(6, 2));
    } else {
        throw std::invalid_argument("unrecognized date format: " + s);
    }
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        throw std::invalid_argument("invalid date: " + s);
    return d;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

std::string format_date_compact(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d%02d%02d", d.year, d.month, d.day);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t comma = line.find(',', start);
        std::string field = line.substr(start, comma == std::string::npos
                                                   ? std::string::npos
                                                   : comma - start);
        size_t b = field.find_first_not_of(" \t\r\n");
        size_t e = field.find_last_not_of(" \t\r\n");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

DailySeries read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open series: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty series file: " + path);

    DailySeries s;
    std::int64_t prev = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto f = split_csv_line(line);
        if (f.size() < 2) throw std::runtime_error("bad series row in " + path + ": " + line);
        std::int64_t day = days_from_date(parse_date(f[0]));
        double v = std::stod(f[1]);
        if (first) {
            s.start_day = day;
            first = false;
        } else if (day != prev + 1) {
            throw std::runtime_error("series not strictly daily at " + f[0] + " in " + path);
        }
        prev = day;
        s.values.push_back(v);
    }
    if (s.values.empty()) throw std::runtime_error("series has no rows: " + path);
    return s;
}

void write_series_csv(const DailySeries& s, const std::string& path,
                      const std::string& value_header) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write series: " + path);
    std::fprintf(f, "date,%s\n", value_header.c_str());
    for (size_t i = 0; i < s.values.size(); ++i) {
        std::fprintf(f, "%s,%.10g\n", format_date(s.date(i)).c_str(), s.values[i]);
    }
    std::fclose(f);
}

}  // namespace floodcast
