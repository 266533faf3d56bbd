#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <string>
#include <string_view>

#include "singleworld/errors.hpp"

namespace singleworld {

/// Exact probability value. All arithmetic in the library is closed over
/// this type; nothing is ever rounded.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

namespace detail {

inline BigInt parse_integer(std::string_view text, std::string_view whole) {
  if (text.empty()) {
    throw ParseError("malformed rational '" + std::string(whole) + "'");
  }
  for (char c : text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw ParseError("malformed rational '" + std::string(whole) + "'");
    }
  }
  return BigInt(std::string(text));
}

}  // namespace detail

/// Parses "num/den", an integer, or a finite decimal ("0.125") into an
/// exact rational. Decimals are read digit by digit, never via double.
inline Rational parse_rational(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  Rational value;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    BigInt num = detail::parse_integer(s.substr(0, slash), text);
    BigInt den = detail::parse_integer(s.substr(slash + 1), text);
    if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
    value = Rational(num, den);
  } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = s.substr(0, dot);
    std::string_view frac_part = s.substr(dot + 1);
    if (int_part.empty() && frac_part.empty()) {
      throw ParseError("malformed rational '" + std::string(text) + "'");
    }
    BigInt whole = int_part.empty() ? BigInt(0) : detail::parse_integer(int_part, text);
    BigInt frac = frac_part.empty() ? BigInt(0) : detail::parse_integer(frac_part, text);
    BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(frac_part.size()));
    value = Rational(whole * scale + frac, scale);
  } else {
    value = Rational(detail::parse_integer(s, text));
  }
  return negative ? Rational(-value) : value;
}

/// Reduced "num/den" form; integers print without a denominator.
inline std::string to_string(const Rational& r) {
  const BigInt& num = boost::multiprecision::numerator(r);
  const BigInt& den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

}  // namespace singleworld
