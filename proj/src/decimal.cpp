#include "irx/decimal.hpp"

#include <cstdlib>
#include <limits>

#include "irx/error.hpp"

namespace irx {

namespace {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw ValidationError("USD amount overflow");
  return r;
}

}  // namespace

Usd Usd::parse(std::string_view s) {
  if (s.empty()) throw ValidationError("empty decimal");
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    ++i;
  }
  std::int64_t whole = 0, frac = 0;
  int frac_digits = 0;
  bool any = false, dot = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.') {
      if (dot) throw ValidationError("malformed decimal: " + std::string(s));
      dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw ValidationError("malformed decimal: " + std::string(s));
    any = true;
    int d = c - '0';
    if (!dot) {
      if (__builtin_mul_overflow(whole, 10, &whole) || __builtin_add_overflow(whole, d, &whole))
        throw ValidationError("decimal out of range: " + std::string(s));
    } else {
      if (++frac_digits > kScaleDigits)
        throw ValidationError("too many fractional digits: " + std::string(s));
      frac = frac * 10 + d;
    }
  }
  if (!any) throw ValidationError("malformed decimal: " + std::string(s));
  for (int k = frac_digits; k < kScaleDigits; ++k) frac *= 10;
  std::int64_t picos;
  if (__builtin_mul_overflow(whole, kScale, &picos))
    throw ValidationError("decimal out of range: " + std::string(s));
  picos = checked_add(picos, frac);
  return from_picos(neg ? -picos : picos);
}

std::string Usd::str() const {
  std::string full = str_fixed(kScaleDigits);
  auto dot = full.find('.');
  std::size_t keep = full.size();
  while (keep > dot + 3 && full[keep - 1] == '0') --keep;
  return full.substr(0, keep);
}

std::string Usd::str_fixed(int digits) const {
  if (digits < 0 || digits > kScaleDigits) throw ValidationError("bad digit count");
  std::int64_t div = 1;
  for (int k = digits; k < kScaleDigits; ++k) div *= 10;
  // picos_ in [INT64_MIN, INT64_MAX]; work in unsigned magnitude.
  bool neg = picos_ < 0;
  unsigned long long mag = neg ? 0ULL - static_cast<unsigned long long>(picos_)
                               : static_cast<unsigned long long>(picos_);
  unsigned long long q = mag / static_cast<unsigned long long>(div);
  unsigned long long r = mag % static_cast<unsigned long long>(div);
  if (r * 2 >= static_cast<unsigned long long>(div) && div > 1) ++q;
  unsigned long long unit = 1;
  for (int k = 0; k < digits; ++k) unit *= 10;
  unsigned long long whole = q / unit, frac = q % unit;
  std::string f = std::to_string(frac);
  if (static_cast<int>(f.size()) < digits) f.insert(0, digits - f.size(), '0');
  std::string out = (neg && q != 0 ? "-" : "") + std::to_string(whole);
  if (digits > 0) out += "." + f;
  return out;
}

Usd& Usd::operator+=(Usd o) {
  picos_ = checked_add(picos_, o.picos_);
  return *this;
}

Usd& Usd::operator-=(Usd o) {
  std::int64_t r;
  if (__builtin_sub_overflow(picos_, o.picos_, &r)) throw ValidationError("USD amount overflow");
  picos_ = r;
  return *this;
}

Usd Usd::times(std::int64_t n) const {
  std::int64_t r;
  if (__builtin_mul_overflow(picos_, n, &r)) throw ValidationError("USD amount overflow");
  return from_picos(r);
}

}  // namespace irx
