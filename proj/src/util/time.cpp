#include "satire/util/time.hpp"

#include <cctype>
#include <cstdio>

#include "satire/error.hpp"

namespace satire {

namespace {

int read_digits(std::string_view text, std::size_t& pos, std::size_t count) {
    if (pos + count > text.size()) {
        throw ParseError("truncated timestamp: " + std::string(text));
    }
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        char c = text[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            throw ParseError("malformed timestamp: " + std::string(text));
        }
        value = value * 10 + (c - '0');
    }
    pos += count;
    return value;
}

void expect(std::string_view text, std::size_t& pos, char c) {
    if (pos >= text.size() || (text[pos] != c && std::tolower(text[pos]) != std::tolower(c))) {
        throw ParseError("malformed timestamp: " + std::string(text));
    }
    ++pos;
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
    using namespace std::chrono;
    std::size_t pos = 0;
    int y = read_digits(text, pos, 4);
    expect(text, pos, '-');
    int mo = read_digits(text, pos, 2);
    expect(text, pos, '-');
    int d = read_digits(text, pos, 2);
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == 't' || text[pos] == ' ')) {
        ++pos;
    } else {
        throw ParseError("timestamp lacks time part: " + std::string(text));
    }
    int h = read_digits(text, pos, 2);
    expect(text, pos, ':');
    int mi = read_digits(text, pos, 2);
    expect(text, pos, ':');
    int s = read_digits(text, pos, 2);
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    int offset_minutes = 0;
    if (pos < text.size() && (text[pos] == 'Z' || text[pos] == 'z')) {
        ++pos;
    } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        int sign = text[pos] == '+' ? 1 : -1;
        ++pos;
        int oh = read_digits(text, pos, 2);
        expect(text, pos, ':');
        int om = read_digits(text, pos, 2);
        offset_minutes = sign * (oh * 60 + om);
    } else {
        throw ParseError("timestamp lacks zone designator: " + std::string(text));
    }
    if (pos != text.size()) {
        throw ParseError("trailing characters in timestamp: " + std::string(text));
    }

    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
        throw ParseError("timestamp out of range: " + std::string(text));
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} - minutes{offset_minutes};
}

std::string format_rfc3339(Timestamp ts) {
    using namespace std::chrono;
    auto days = floor<std::chrono::days>(ts);
    year_month_day ymd{days};
    hh_mm_ss hms{ts - days};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

Timestamp now_utc() {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

}  // namespace satire
