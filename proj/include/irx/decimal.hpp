#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace irx {

// Exact fixed-point USD amount with 12 fractional digits (picodollars).
//
// Prices quoted per million tokens with up to six decimals map to an
// integer number of picodollars per token, so token-cost products are
// exact integer multiplications. Range is about +/- 9.2 million USD.
class Usd {
 public:
  static constexpr int kScaleDigits = 12;
  static constexpr std::int64_t kScale = 1'000'000'000'000;

  constexpr Usd() = default;

  static constexpr Usd from_picos(std::int64_t picos) {
    Usd u;
    u.picos_ = picos;
    return u;
  }

  // Parses "2.50", "0.0003", "-1", "3e-4" is rejected. Throws ValidationError
  // on malformed input or more than 12 fractional digits.
  static Usd parse(std::string_view s);

  constexpr std::int64_t picos() const { return picos_; }

  // Canonical form: trailing zeros trimmed but at least two fractional
  // digits, e.g. "2.50", "0.0003", "0.00".
  std::string str() const;

  // Fixed number of fractional digits (rounded half away from zero).
  std::string str_fixed(int digits) const;

  // Lossy; for normalization and plotting only.
  long double to_long_double() const {
    return static_cast<long double>(picos_) / static_cast<long double>(kScale);
  }

  Usd& operator+=(Usd o);
  Usd& operator-=(Usd o);
  friend Usd operator+(Usd a, Usd b) { return a += b; }
  friend Usd operator-(Usd a, Usd b) { return a -= b; }
  friend constexpr auto operator<=>(Usd a, Usd b) = default;

  // Exact multiplication by an integer count; throws on overflow.
  Usd times(std::int64_t n) const;

 private:
  std::int64_t picos_ = 0;
};

}  // namespace irx
