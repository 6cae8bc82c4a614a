#pragma once

// Exact rational arithmetic used throughout the library. Probabilities,
// tolerances and metric values are kept as unbounded rationals so that
// independence checks and repair minimality are exact statements about
// counts, never float comparisons.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace fairrep {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline Rat make_rat(long long num, long long den = 1) {
    return Rat(BigInt(num), BigInt(den));
}

inline double to_double(const Rat& r) {
    return r.convert_to<double>();
}

// Renders "p/q", or just "p" for integers. Stable across platforms.
std::string rat_to_string(const Rat& r);

// Accepts "p", "-p", "p/q" with optional surrounding whitespace.
// Returns nullopt on malformed input (including q = 0). Decimal notation is
// deliberately not accepted: callers that need to reject floats rely on this.
std::optional<Rat> rat_from_string(const std::string& text);

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

}  // namespace fairrep
