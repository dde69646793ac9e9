#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace kmt {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Accepts "p/q", integers, and decimals with an optional exponent
// ("-0.25", "1.5e-3"). Decimals are converted exactly.
Rational parse_rational(std::string_view text);

// "p/q", or "p" when the denominator is one.
std::string to_string(const Rational& r);

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

Integer lcm(const Integer& a, const Integer& b);

// Narrowing with an overflow check; throws std::overflow_error.
std::int64_t to_int64(const Integer& v);

}  // namespace kmt
