#include "provgate/timestamp.hpp"

#include <chrono>
#include <cstdio>

namespace provgate {

namespace {

int digits(std::string_view text, std::size_t pos, std::size_t count) {
    int value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        char c = text[i];
        if (c < '0' || c > '9') {
            throw TimestampError("timestamp: expected digit at offset " + std::to_string(i));
        }
        value = value * 10 + (c - '0');
    }
    return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
    if (text[pos] != c) {
        throw TimestampError(std::string("timestamp: expected '") + c + "' at offset " +
                             std::to_string(pos));
    }
}

}  // namespace

Timestamp Timestamp::parse(std::string_view text) {
    if (text.size() != 20) {
        throw TimestampError("timestamp: expected YYYY-MM-DDTHH:MM:SSZ, got '" + std::string(text) +
                             "'");
    }
    const int year = digits(text, 0, 4);
    expect(text, 4, '-');
    const int month = digits(text, 5, 2);
    expect(text, 7, '-');
    const int day = digits(text, 8, 2);
    expect(text, 10, 'T');
    const int hour = digits(text, 11, 2);
    expect(text, 13, ':');
    const int minute = digits(text, 14, 2);
    expect(text, 16, ':');
    const int second = digits(text, 17, 2);
    expect(text, 19, 'Z');

    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) {
        throw TimestampError("timestamp: invalid calendar date '" + std::string(text) + "'");
    }
    if (hour > 23 || minute > 59 || second > 59) {
        throw TimestampError("timestamp: invalid time of day '" + std::string(text) + "'");
    }
    const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
    return Timestamp(static_cast<std::int64_t>(days_since_epoch) * 86400 + hour * 3600 +
                     minute * 60 + second);
}

std::string Timestamp::to_string() const {
    using namespace std::chrono;
    std::int64_t days = seconds_ / 86400;
    std::int64_t rem = seconds_ % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                  static_cast<int>(rem % 60));
    return buf;
}

}  // namespace provgate
