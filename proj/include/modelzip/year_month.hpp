#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace modelzip {

// Calendar month, "YYYY-MM", limited to 2000-01..2100-12.
class YearMonth {
public:
    constexpr YearMonth() = default;
    YearMonth(int year, int month);

    // Throws InvalidArgument naming the offending text.
    static YearMonth parse(std::string_view text);

    [[nodiscard]] int year() const noexcept { return year_; }
    [[nodiscard]] int month() const noexcept { return month_; }
    [[nodiscard]] std::string to_string() const;
    // Months since 0000-01; consecutive months differ by one.
    [[nodiscard]] int ordinal() const noexcept { return year_ * 12 + (month_ - 1); }
    [[nodiscard]] YearMonth next() const;

    friend auto operator<=>(const YearMonth&, const YearMonth&) = default;

private:
    int year_ = 2000;
    int month_ = 1;
};

}  // namespace modelzip
