#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace qsearch {

// A calendar point parsed from free text, ordered by its UTC instant.
// Partial dates ("2024", "2024-03") resolve to the start of the period.
class Timestamp {
public:
    enum class Precision { Year, Month, Day, Minute, Second };

    // Accepts ISO-8601 prefixes (YYYY, YYYY-MM, YYYY-MM-DD, optional time and
    // zone), slash-separated dates and the CJK form 2024年3月5日.
    static std::optional<Timestamp> parse(std::string_view text);

    // First date of at least month precision mentioned anywhere in `text`.
    static std::optional<Timestamp> find_first(std::string_view text);

    static Timestamp from_epoch_seconds(std::int64_t seconds, Precision precision = Precision::Second);

    std::int64_t epoch_seconds() const noexcept { return seconds_; }
    Precision precision() const noexcept { return precision_; }

    // ISO-8601 rendering at the parsed precision, in UTC.
    std::string iso() const;

    friend bool operator==(const Timestamp& a, const Timestamp& b) noexcept {
        return a.seconds_ == b.seconds_;
    }
    friend std::strong_ordering operator<=>(const Timestamp& a, const Timestamp& b) noexcept {
        return a.seconds_ <=> b.seconds_;
    }

private:
    std::int64_t seconds_ = 0;
    Precision precision_ = Precision::Second;
};

} // namespace qsearch
