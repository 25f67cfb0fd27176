#pragma once

#include <string>

namespace factimp {

/// Calendar day stored as a serial count of days since 1970-01-01.
/// The panel code only ever needs day arithmetic and ISO-8601 text.
struct Date {
    int serial = 0;

    Date operator+(int days) const { return Date{serial + days}; }
    int operator-(Date other) const { return serial - other.serial; }
    auto operator<=>(const Date&) const = default;
};

/// Parses "YYYY-MM-DD". Throws ValidationError on malformed input.
Date parse_date(const std::string& iso);

/// Renders as "YYYY-MM-DD".
std::string format_date(Date d);

int days_from_civil(int y, int m, int d);
void civil_from_days(int serial, int& y, int& m, int& d);

}  // namespace factimp
