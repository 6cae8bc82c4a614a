#include "fairrep/rational.hpp"

#include <cctype>

namespace fairrep {

std::string rat_to_string(const Rat& r) {
    const BigInt num = numerator(r);
    const BigInt den = denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

namespace {

bool parse_integer(const std::string& text, std::size_t begin, std::size_t end, BigInt* out) {
    if (begin >= end) return false;
    std::size_t i = begin;
    bool negative = false;
    if (text[i] == '-' || text[i] == '+') {
        negative = text[i] == '-';
        ++i;
    }
    if (i >= end) return false;
    BigInt value = 0;
    for (; i < end; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
        value = value * 10 + (text[i] - '0');
    }
    *out = negative ? BigInt(-value) : value;
    return true;
}

}  // namespace

std::optional<Rat> rat_from_string(const std::string& text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    if (begin == end) return std::nullopt;

    const std::size_t slash = text.find('/', begin);
    BigInt num;
    if (slash == std::string::npos || slash >= end) {
        if (!parse_integer(text, begin, end, &num)) return std::nullopt;
        return Rat(num);
    }
    BigInt den;
    if (!parse_integer(text, begin, slash, &num)) return std::nullopt;
    if (!parse_integer(text, slash + 1, end, &den)) return std::nullopt;
    if (den == 0) return std::nullopt;
    return Rat(num, den);
}

}  // namespace fairrep
