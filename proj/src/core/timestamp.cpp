#include "qsearch/core/timestamp.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <string>

#include "qsearch/core/utf8.hpp"

namespace qsearch {

namespace {

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y = static_cast<int>(yy + (m <= 2));
}

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(int y, unsigned m) {
    static constexpr std::array<unsigned, 12> kDays{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && leap(y) ? 29 : kDays[m - 1];
}

struct Fields {
    int year = 0;
    unsigned month = 1;
    unsigned day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;
    int offset_minutes = 0;
    Timestamp::Precision precision = Timestamp::Precision::Year;
};

class Scanner {
public:
    explicit Scanner(std::string_view s) : s_(s) {}

    bool done() const { return pos_ >= s_.size(); }
    char peek() const { return done() ? '\0' : s_[pos_]; }
    void skip_spaces() {
        while (!done() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
    }
    bool eat(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    bool eat(std::string_view lit) {
        if (s_.substr(pos_, lit.size()) == lit) {
            pos_ += lit.size();
            return true;
        }
        return false;
    }
    // Reads between min_digits and max_digits decimal digits.
    bool number(int& out, std::size_t min_digits, std::size_t max_digits) {
        std::size_t start = pos_;
        int v = 0;
        while (!done() && std::isdigit(static_cast<unsigned char>(s_[pos_])) && pos_ - start < max_digits) {
            v = v * 10 + (s_[pos_] - '0');
            ++pos_;
        }
        if (pos_ - start < min_digits) {
            pos_ = start;
            return false;
        }
        out = v;
        return true;
    }
    std::string word() {
        std::string w;
        while (!done() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
            w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s_[pos_]))));
            ++pos_;
        }
        return w;
    }
    std::size_t pos() const { return pos_; }
    void reset(std::size_t p) { pos_ = p; }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

bool valid(const Fields& f) {
    return f.year >= 1000 && f.year <= 9999 && f.month >= 1 && f.month <= 12 && f.day >= 1 &&
           f.day <= days_in_month(f.year, f.month) && f.hour >= 0 && f.hour <= 23 && f.minute >= 0 &&
           f.minute <= 59 && f.second >= 0 && f.second <= 60;
}

// Optional "[T ]HH:MM[:SS[.fff]][Z|±HH[:MM]]".
void parse_time(Scanner& sc, Fields& f) {
    const std::size_t save = sc.pos();
    if (!(sc.eat('T') || sc.eat(' '))) {
        return;
    }
    sc.skip_spaces();
    int h = 0;
    int m = 0;
    if (!sc.number(h, 1, 2) || !sc.eat(':') || !sc.number(m, 2, 2)) {
        sc.reset(save);
        return;
    }
    f.hour = h;
    f.minute = m;
    f.precision = Timestamp::Precision::Minute;
    if (sc.eat(':')) {
        int s = 0;
        if (sc.number(s, 2, 2)) {
            f.second = s;
            f.precision = Timestamp::Precision::Second;
            if (sc.eat('.')) {
                int frac = 0;
                sc.number(frac, 1, 9);
            }
        }
    }
    if (sc.eat('Z')) {
        return;
    }
    const char sign = sc.peek();
    if (sign == '+' || sign == '-') {
        const std::size_t zsave = sc.pos();
        sc.eat(sign);
        int oh = 0;
        int om = 0;
        if (!sc.number(oh, 2, 2)) {
            sc.reset(zsave);
            return;
        }
        sc.eat(':');
        sc.number(om, 2, 2);
        f.offset_minutes = (sign == '-' ? -1 : 1) * (oh * 60 + om);
    }
}

bool parse_numeric(std::string_view text, Fields& f) {
    Scanner sc(text);
    int year = 0;
    if (!sc.number(year, 4, 4)) {
        return false;
    }
    f.year = year;
    f.precision = Timestamp::Precision::Year;
    // CJK form: 2024年3月5日
    if (sc.eat("年")) {
        int month = 0;
        if (sc.number(month, 1, 2) && sc.eat("月")) {
            f.month = static_cast<unsigned>(month);
            f.precision = Timestamp::Precision::Month;
            int day = 0;
            if (sc.number(day, 1, 2) && (sc.eat("日") || sc.eat("号"))) {
                f.day = static_cast<unsigned>(day);
                f.precision = Timestamp::Precision::Day;
                sc.skip_spaces();
                int h = 0;
                int m = 0;
                const std::size_t save = sc.pos();
                if (sc.number(h, 1, 2) && sc.eat(':') && sc.number(m, 2, 2)) {
                    f.hour = h;
                    f.minute = m;
                    f.precision = Timestamp::Precision::Minute;
                } else {
                    sc.reset(save);
                }
            }
        }
        return true;
    }
    const char sep = sc.peek();
    if (sep != '-' && sep != '/' && sep != '.') {
        // Bare year must not be followed by more digits or letters.
        return sc.done() || !std::isalnum(static_cast<unsigned char>(sc.peek()));
    }
    sc.eat(sep);
    int month = 0;
    if (!sc.number(month, 1, 2)) {
        return false;
    }
    f.month = static_cast<unsigned>(month);
    f.precision = Timestamp::Precision::Month;
    if (!sc.eat(sep)) {
        return sc.done() || !std::isdigit(static_cast<unsigned char>(sc.peek()));
    }
    int day = 0;
    if (!sc.number(day, 1, 2)) {
        return false;
    }
    f.day = static_cast<unsigned>(day);
    f.precision = Timestamp::Precision::Day;
    parse_time(sc, f);
    return true;
}

int month_from_name(const std::string& w) {
    static constexpr std::array<const char*, 12> kNames{"jan", "feb", "mar", "apr", "may", "jun",
                                                        "jul", "aug", "sep", "oct", "nov", "dec"};
    if (w.size() < 3) {
        return 0;
    }
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (w.compare(0, 3, kNames[i]) == 0) {
            return static_cast<int>(i) + 1;
        }
    }
    return 0;
}

// "February 3, 2025", "Feb 2025", "3 February 2025".
bool parse_english(std::string_view text, Fields& f) {
    Scanner sc(text);
    int day = 0;
    bool day_first = sc.number(day, 1, 2);
    sc.skip_spaces();
    const int month = month_from_name(sc.word());
    if (month == 0) {
        return false;
    }
    sc.eat('.');
    sc.skip_spaces();
    if (!day_first) {
        const std::size_t save = sc.pos();
        if (sc.number(day, 1, 2) && !std::isdigit(static_cast<unsigned char>(sc.peek()))) {
            sc.eat("st") || sc.eat("nd") || sc.eat("rd") || sc.eat("th");
            sc.eat(',');
            sc.skip_spaces();
        } else {
            day = 0;
            sc.reset(save);
        }
    }
    int year = 0;
    if (!sc.number(year, 4, 4)) {
        return false;
    }
    f.year = year;
    f.month = static_cast<unsigned>(month);
    if (day > 0) {
        f.day = static_cast<unsigned>(day);
        f.precision = Timestamp::Precision::Day;
    } else {
        f.precision = Timestamp::Precision::Month;
    }
    return true;
}

} // namespace

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
    const std::string trimmed = utf8::trim(text);
    if (trimmed.empty()) {
        return std::nullopt;
    }
    Fields f;
    if (!parse_numeric(trimmed, f)) {
        f = Fields{};
        if (!parse_english(trimmed, f)) {
            return std::nullopt;
        }
    }
    if (!valid(f)) {
        return std::nullopt;
    }
    const std::int64_t days = days_from_civil(f.year, f.month, f.day);
    const std::int64_t seconds =
        days * 86400 + f.hour * 3600 + f.minute * 60 + f.second - static_cast<std::int64_t>(f.offset_minutes) * 60;
    return from_epoch_seconds(seconds, f.precision);
}

std::optional<Timestamp> Timestamp::find_first(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (!std::isalnum(c)) {
            continue;
        }
        if (i > 0 && std::isalnum(static_cast<unsigned char>(text[i - 1]))) {
            continue;
        }
        if (auto ts = parse(text.substr(i)); ts && ts->precision() != Precision::Year) {
            return ts;
        }
    }
    return std::nullopt;
}

Timestamp Timestamp::from_epoch_seconds(std::int64_t seconds, Precision precision) {
    Timestamp t;
    t.seconds_ = seconds;
    t.precision_ = precision;
    return t;
}

std::string Timestamp::iso() const {
    std::int64_t days = seconds_ / 86400;
    std::int64_t rem = seconds_ % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    civil_from_days(days, y, m, d);
    const int hh = static_cast<int>(rem / 3600);
    const int mm = static_cast<int>((rem % 3600) / 60);
    const int ss = static_cast<int>(rem % 60);
    char buf[32];
    switch (precision_) {
    case Precision::Year:
        std::snprintf(buf, sizeof buf, "%04d", y);
        break;
    case Precision::Month:
        std::snprintf(buf, sizeof buf, "%04d-%02u", y, m);
        break;
    case Precision::Day:
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
        break;
    case Precision::Minute:
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02dZ", y, m, d, hh, mm);
        break;
    case Precision::Second:
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", y, m, d, hh, mm, ss);
        break;
    }
    return buf;
}

} // namespace qsearch
