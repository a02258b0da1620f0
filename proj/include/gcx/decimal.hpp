#pragma once

#include <compare>
#include <concepts>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gcx {

using int128 = __int128;
using uint128 = unsigned __int128;

/// Round-half-even quotient of num / den (den != 0).
int128 div_half_even(int128 num, int128 den);

/// Decimal rendering of 128-bit integers.
std::string to_string_u128(uint128 value);
std::string to_string_i128(int128 value);

/// Exact fixed-point decimal with six fractional digits.
///
/// Every quantity that must be replayable (compute hours, prices, currency,
/// tokens) is carried in this type. Products and quotients are rounded
/// half-even exactly once; intermediates are widened to 256 bits so a single
/// rounding is preserved even when the raw product leaves the 128-bit range.
class Decimal {
 public:
  static constexpr int kDigits = 6;
  static constexpr int128 kScale = 1'000'000;

  constexpr Decimal() = default;

  template <std::integral T>
  constexpr Decimal(T units) : raw_(static_cast<int128>(units) * kScale) {}  // NOLINT

  static constexpr Decimal from_raw(int128 raw) {
    Decimal d;
    d.raw_ = raw;
    return d;
  }

  /// Parses "-12.5", "3", "0.000001", "1e3", "2.5E-2". More than six fractional
  /// digits are rounded half-even.
  static Decimal parse(std::string_view text);

  /// Nearest representable value (ties to even). Throws on non-finite input.
  static Decimal from_double(double value);

  constexpr int128 raw() const { return raw_; }
  double to_double() const;

  /// Shortest exact rendering: "5", "0.5", "-3.25".
  std::string str() const;

  constexpr bool is_zero() const { return raw_ == 0; }
  constexpr bool is_negative() const { return raw_ < 0; }
  constexpr bool is_positive() const { return raw_ > 0; }

  Decimal operator-() const;
  Decimal& operator+=(Decimal rhs);
  Decimal& operator-=(Decimal rhs);
  Decimal& operator*=(Decimal rhs);
  Decimal& operator/=(Decimal rhs);

  friend Decimal operator+(Decimal a, Decimal b) { return a += b; }
  friend Decimal operator-(Decimal a, Decimal b) { return a -= b; }
  friend Decimal operator*(Decimal a, Decimal b) { return a *= b; }
  friend Decimal operator/(Decimal a, Decimal b) { return a /= b; }

  friend constexpr bool operator==(Decimal a, Decimal b) = default;
  friend constexpr std::strong_ordering operator<=>(Decimal a, Decimal b) {
    return a.raw_ <=> b.raw_;
  }

  /// a * b / c with one half-even rounding.
  static Decimal mul_div(Decimal a, Decimal b, Decimal c);

  /// Nearest multiple of step (ties to even multiple).
  Decimal round_to(Decimal step) const;
  bool is_multiple_of(Decimal step) const;

  /// Integer part toward negative infinity when whole, otherwise throws.
  std::int64_t to_integer() const;

 private:
  int128 raw_ = 0;
};

Decimal abs(Decimal d);

/// Exact three-way comparison of a*b against c*d.
std::strong_ordering compare_products(Decimal a, Decimal b, Decimal c, Decimal d);
std::ostream& operator<<(std::ostream& os, Decimal d);

/// Splits total across weights in exact proportion. Rounding dust (at most one
/// raw unit per recipient) is assigned to the largest weight, ties to the
/// lowest index, so the parts always sum exactly to total.
std::vector<Decimal> allocate_pro_rata(Decimal total, std::span<const Decimal> weights);

namespace literals {
inline Decimal operator""_d(const char* text, std::size_t n) {
  return Decimal::parse(std::string_view(text, n));
}
}  // namespace literals

}  // namespace gcx
