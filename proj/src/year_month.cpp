#include "modelzip/year_month.hpp"

#include "modelzip/error.hpp"

#include <cstdio>

namespace modelzip {

YearMonth::YearMonth(int year, int month) : year_(year), month_(month) {
    if (year < 2000 || year > 2100 || month < 1 || month > 12)
        throw InvalidArgument("month " + std::to_string(year) + "-" + std::to_string(month) +
                              " outside 2000-01..2100-12");
}

YearMonth YearMonth::parse(std::string_view text) {
    auto digits = [&](std::size_t from, std::size_t n) {
        int v = 0;
        for (std::size_t i = from; i < from + n; ++i) {
            if (text[i] < '0' || text[i] > '9') return -1;
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    if (text.size() != 7 || text[4] != '-') throw InvalidArgument("invalid month '" + std::string(text) + "'");
    int y = digits(0, 4);
    int m = digits(5, 2);
    if (y < 2000 || y > 2100 || m < 1 || m > 12) throw InvalidArgument("invalid month '" + std::string(text) + "'");
    return YearMonth(y, m);
}

std::string YearMonth::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year_, month_);
    return buf;
}

YearMonth YearMonth::next() const { return month_ == 12 ? YearMonth(year_ + 1, 1) : YearMonth(year_, month_ + 1); }

}  // namespace modelzip
