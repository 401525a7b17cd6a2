#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace provgate {

class TimestampError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// UTC instant at second precision. Text form is exactly "YYYY-MM-DDTHH:MM:SSZ".
class Timestamp {
public:
    Timestamp() = default;

    static Timestamp parse(std::string_view text);
    static Timestamp from_unix(std::int64_t seconds) { return Timestamp(seconds); }

    std::int64_t unix_seconds() const { return seconds_; }
    std::string to_string() const;

    Timestamp plus_days(std::int64_t days) const { return Timestamp(seconds_ + days * 86400); }
    Timestamp plus_seconds(std::int64_t s) const { return Timestamp(seconds_ + s); }

    auto operator<=>(const Timestamp&) const = default;

private:
    explicit Timestamp(std::int64_t s) : seconds_(s) {}
    std::int64_t seconds_ = 0;
};

}  // namespace provgate
