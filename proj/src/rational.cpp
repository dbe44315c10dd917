#include "blie/rational.hpp"

#include <cctype>

namespace blie {

Rational Rational::parse(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    i = 1;
  }
  auto digits = [&](std::size_t& pos, Rational& acc, int& count) {
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      acc = acc * Rational(10) + Rational(text[pos] - '0');
      ++pos;
      ++count;
    }
  };
  Rational value;
  int whole = 0;
  digits(i, value, whole);
  if (i < text.size() && text[i] == '/') {
    ++i;
    Rational den;
    int n = 0;
    digits(i, den, n);
    if (n == 0 || i != text.size()) throw std::invalid_argument("bad rational literal: " + std::string(text));
    value = value / den;
  } else if (i < text.size() && text[i] == '.') {
    ++i;
    Rational frac;
    int n = 0;
    digits(i, frac, n);
    if (whole + n == 0 || i != text.size()) throw std::invalid_argument("bad decimal literal: " + std::string(text));
    Rational scale(1);
    for (int k = 0; k < n; ++k) scale *= Rational(10);
    value = value + frac / scale;
  } else if (whole == 0 || i != text.size()) {
    throw std::invalid_argument("bad rational literal: " + std::string(text));
  }
  return negative ? -value : value;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

}  // namespace blie
