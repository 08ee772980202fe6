#include "vocab_surgeon/unicode.hpp"

#include <algorithm>
#include <array>

#include "vocab_surgeon/error.hpp"

namespace vs::unicode {

namespace {

struct CodepointMapping {
    Codepoint cp;
    const char* replacement;  // UTF-8
};

#include "unicode_tables.inc"

const char* lookup(const CodepointMapping* begin, const CodepointMapping* end,
                   Codepoint cp) {
    auto it = std::lower_bound(begin, end, cp,
                               [](const CodepointMapping& m, Codepoint c) { return m.cp < c; });
    if (it != end && it->cp == cp) return it->replacement;
    return nullptr;
}

// Decodes one code point starting at `pos`. Returns nullopt on malformed
// input (overlong forms, surrogates, and out-of-range rejected).
std::optional<Codepoint> decode_one(std::string_view s, std::size_t pos, std::size_t* len) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        *len = 1;
        return b0;
    }
    std::size_t need;
    Codepoint cp;
    if ((b0 & 0xE0) == 0xC0) { need = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { need = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { need = 4; cp = b0 & 0x07; }
    else return std::nullopt;
    if (pos + need > s.size()) return std::nullopt;
    for (std::size_t i = 1; i < need; i++) {
        unsigned char b = byte(pos + i);
        if ((b & 0xC0) != 0x80) return std::nullopt;
        cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr Codepoint kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[need]) return std::nullopt;             // overlong
    if (cp >= 0xD800 && cp <= 0xDFFF) return std::nullopt;  // surrogate
    if (cp > 0x10FFFF) return std::nullopt;
    *len = need;
    return cp;
}

template <typename Fn>
void for_each_codepoint(std::string_view text, Fn&& fn) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t len;
        auto cp = decode_one(text, pos, &len);
        if (!cp) {
            throw InputFormatError("invalid UTF-8 sequence at byte offset " +
                                   std::to_string(pos));
        }
        fn(*cp, text.substr(pos, len));
        pos += len;
    }
}

}  // namespace

std::optional<std::size_t> find_invalid_utf8(std::string_view text) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t len;
        if (!decode_one(text, pos, &len)) return pos;
        pos += len;
    }
    return std::nullopt;
}

std::vector<Codepoint> decode_utf8(std::string_view text) {
    std::vector<Codepoint> out;
    out.reserve(text.size());
    for_each_codepoint(text, [&](Codepoint cp, std::string_view) { out.push_back(cp); });
    return out;
}

void append_utf8(std::string& out, Codepoint cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode_utf8(const std::vector<Codepoint>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (Codepoint cp : cps) append_utf8(out, cp);
    return out;
}

std::size_t codepoint_count(std::string_view text) {
    std::size_t n = 0;
    for_each_codepoint(text, [&](Codepoint, std::string_view) { n++; });
    return n;
}

bool is_whitespace(Codepoint cp) {
    // Unicode White_Space property.
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680:
        case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
        case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
        case 0x200A: case 0x2028: case 0x2029: case 0x202F: case 0x205F:
        case 0x3000:
            return true;
        default:
            return false;
    }
}

std::string nfkc(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for_each_codepoint(text, [&](Codepoint cp, std::string_view raw) {
        if (const char* rep = lookup(std::begin(kNfkcMappings), std::end(kNfkcMappings), cp)) {
            out += rep;
        } else {
            out += raw;
        }
    });
    return out;
}

std::string lowercase(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for_each_codepoint(text, [&](Codepoint cp, std::string_view raw) {
        if (const char* rep =
                lookup(std::begin(kLowercaseMappings), std::end(kLowercaseMappings), cp)) {
            out += rep;
        } else {
            out += raw;
        }
    });
    return out;
}

}  // namespace vs::unicode
