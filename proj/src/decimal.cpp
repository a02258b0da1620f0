#include "gcx/decimal.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gcx/error.hpp"

namespace gcx {
namespace {

constexpr int128 kI128Max = static_cast<int128>(~static_cast<uint128>(0) >> 1);

// 256-bit unsigned integer as (hi, lo) halves, just enough for a*b/c.
struct U256 {
  uint128 hi = 0;
  uint128 lo = 0;
};

U256 mul_wide(uint128 a, uint128 b) {
  const uint128 mask = ~static_cast<uint128>(0) >> 64;
  const uint128 a0 = a & mask, a1 = a >> 64;
  const uint128 b0 = b & mask, b1 = b >> 64;
  const uint128 p00 = a0 * b0;
  const uint128 p01 = a0 * b1;
  const uint128 p10 = a1 * b0;
  const uint128 p11 = a1 * b1;
  const uint128 mid = (p00 >> 64) + (p01 & mask) + (p10 & mask);
  U256 r;
  r.lo = (p00 & mask) | (mid << 64);
  r.hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
  return r;
}

// Long division of a 256-bit value by a 128-bit divisor. Quotient must fit in
// 128 bits (checked by the caller via hi < den).
uint128 div_wide(U256 num, uint128 den, uint128& rem) {
  if (num.hi == 0) {
    rem = num.lo % den;
    return num.lo / den;
  }
  uint128 r = num.hi;
  uint128 q = 0;
  for (int i = 127; i >= 0; --i) {
    const bool carry = (r >> 127) != 0;
    r = (r << 1) | ((num.lo >> i) & 1);
    q <<= 1;
    if (carry || r >= den) {
      r -= den;
      q |= 1;
    }
  }
  rem = r;
  return q;
}

uint128 uabs(int128 v) { return v < 0 ? static_cast<uint128>(0) - static_cast<uint128>(v) : static_cast<uint128>(v); }

// round_half_even(a * b / c) on signed 128-bit operands.
int128 mul_div_raw(int128 a, int128 b, int128 c) {
  if (c == 0) throw Error(ErrorCode::DivisionByZero, "decimal division by zero");
  const bool negative = (a < 0) != (b < 0) ? (c > 0) : (c < 0);
  const uint128 ua = uabs(a), ub = uabs(b), uc = uabs(c);
  const U256 prod = mul_wide(ua, ub);
  if (prod.hi >= uc) throw Error(ErrorCode::Overflow, "decimal result out of range");
  uint128 rem = 0;
  uint128 q = div_wide(prod, uc, rem);
  // Half-even on the magnitude; symmetric for negatives.
  const uint128 twice_rem = rem << 1;
  const bool rem_overflow = (rem >> 127) != 0;
  if (rem_overflow || twice_rem > uc || (twice_rem == uc && (q & 1))) ++q;
  if (q > static_cast<uint128>(kI128Max)) throw Error(ErrorCode::Overflow, "decimal result out of range");
  const int128 sq = static_cast<int128>(q);
  return (negative && sq != 0) ? -sq : sq;
}

int128 checked_add(int128 a, int128 b) {
  int128 r;
  if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "decimal addition overflow");
  return r;
}

int128 checked_sub(int128 a, int128 b) {
  int128 r;
  if (__builtin_sub_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "decimal subtraction overflow");
  return r;
}

}  // namespace

int128 div_half_even(int128 num, int128 den) { return mul_div_raw(num, 1, den); }

std::string to_string_u128(uint128 value) {
  if (value == 0) return "0";
  std::string out;
  while (value > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string to_string_i128(int128 value) {
  if (value < 0) return "-" + to_string_u128(uabs(value));
  return to_string_u128(static_cast<uint128>(value));
}

Decimal Decimal::parse(std::string_view text) {
  const auto fail = [&] { return Error(ErrorCode::Parse, "not a decimal: '" + std::string(text) + "'"); };
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
    negative = text[i] == '-';
    ++i;
  }
  // Collect all significant digits and the position of the decimal point.
  std::string digits;
  int frac_digits = 0;
  bool seen_point = false;
  bool any_digit = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      any_digit = true;
      if (seen_point) ++frac_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) throw fail();
  int exponent = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool exp_negative = false;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
      exp_negative = text[i] == '-';
      ++i;
    }
    if (i >= text.size()) throw fail();
    for (; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') throw fail();
      exponent = exponent * 10 + (text[i] - '0');
      if (exponent > 60) throw Error(ErrorCode::Overflow, "decimal exponent out of range");
    }
    if (exp_negative) exponent = -exponent;
  }
  if (i != text.size()) throw fail();

  // value = digits * 10^(exponent - frac_digits); raw = value * 10^6.
  const int shift = exponent - frac_digits + kDigits;
  const auto strip = digits.find_first_not_of('0');
  const std::string_view significant =
      strip == std::string::npos ? std::string_view("0") : std::string_view(digits).substr(strip);
  if (significant.size() > 38) throw Error(ErrorCode::Overflow, "decimal out of range: " + std::string(text));
  int128 mantissa = 0;
  for (char c : significant) mantissa = mantissa * 10 + (c - '0');

  int128 raw = 0;
  if (shift >= 0) {
    raw = mantissa;
    for (int k = 0; k < shift; ++k) {
      if (__builtin_mul_overflow(raw, static_cast<int128>(10), &raw))
        throw Error(ErrorCode::Overflow, "decimal out of range: " + std::string(text));
    }
  } else if (-shift > 38) {
    raw = 0;
  } else {
    int128 den = 1;
    for (int k = 0; k < -shift; ++k) den *= 10;
    raw = div_half_even(mantissa, den);
  }
  return from_raw(negative ? -raw : raw);
}

Decimal Decimal::from_double(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "non-finite value");
  const long double scaled = static_cast<long double>(value) * static_cast<long double>(kScale);
  if (std::fabs(scaled) > 1e36L) throw Error(ErrorCode::Overflow, "double out of decimal range");
  // nearbyint honours the default round-to-nearest-even mode.
  const long double rounded = std::nearbyint(scaled);
  return from_raw(static_cast<int128>(rounded));
}

double Decimal::to_double() const {
  return static_cast<double>(static_cast<long double>(raw_) / static_cast<long double>(kScale));
}

std::string Decimal::str() const {
  const bool negative = raw_ < 0;
  const uint128 mag = uabs(raw_);
  std::string whole = to_string_u128(mag / static_cast<uint128>(kScale));
  std::string frac = to_string_u128(mag % static_cast<uint128>(kScale));
  frac.insert(0, static_cast<std::size_t>(kDigits) - frac.size(), '0');
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  std::string out = negative ? "-" : "";
  out += whole;
  if (!frac.empty()) out += "." + frac;
  return out;
}

Decimal Decimal::operator-() const { return from_raw(checked_sub(0, raw_)); }

Decimal& Decimal::operator+=(Decimal rhs) {
  raw_ = checked_add(raw_, rhs.raw_);
  return *this;
}

Decimal& Decimal::operator-=(Decimal rhs) {
  raw_ = checked_sub(raw_, rhs.raw_);
  return *this;
}

Decimal& Decimal::operator*=(Decimal rhs) {
  raw_ = mul_div_raw(raw_, rhs.raw_, kScale);
  return *this;
}

Decimal& Decimal::operator/=(Decimal rhs) {
  raw_ = mul_div_raw(raw_, kScale, rhs.raw_);
  return *this;
}

Decimal Decimal::mul_div(Decimal a, Decimal b, Decimal c) {
  // (a.raw/S)(b.raw/S)/(c.raw/S) * S = a.raw*b.raw/c.raw
  return from_raw(mul_div_raw(a.raw_, b.raw_, c.raw_));
}

Decimal Decimal::round_to(Decimal step) const {
  if (step.raw_ <= 0) throw Error(ErrorCode::InvalidArgument, "rounding step must be positive");
  const int128 units = div_half_even(raw_, step.raw_);
  return from_raw(units * step.raw_);
}

bool Decimal::is_multiple_of(Decimal step) const {
  if (step.raw_ == 0) return raw_ == 0;
  return raw_ % step.raw_ == 0;
}

std::int64_t Decimal::to_integer() const {
  if (raw_ % kScale != 0) throw Error(ErrorCode::InvalidArgument, "not an integer: " + str());
  const int128 v = raw_ / kScale;
  if (v > INT64_MAX || v < INT64_MIN) throw Error(ErrorCode::Overflow, "integer out of range");
  return static_cast<std::int64_t>(v);
}

Decimal abs(Decimal d) { return d.is_negative() ? -d : d; }

std::strong_ordering compare_products(Decimal a, Decimal b, Decimal c, Decimal d) {
  const auto sign = [](int128 x, int128 y) { return (x == 0 || y == 0) ? 0 : ((x < 0) != (y < 0) ? -1 : 1); };
  const int lhs_sign = sign(a.raw(), b.raw());
  const int rhs_sign = sign(c.raw(), d.raw());
  if (lhs_sign != rhs_sign) return lhs_sign <=> rhs_sign;
  if (lhs_sign == 0) return std::strong_ordering::equal;
  const U256 lhs = mul_wide(uabs(a.raw()), uabs(b.raw()));
  const U256 rhs = mul_wide(uabs(c.raw()), uabs(d.raw()));
  auto mag = lhs.hi != rhs.hi ? lhs.hi <=> rhs.hi : lhs.lo <=> rhs.lo;
  return lhs_sign > 0 ? mag : 0 <=> mag;
}

std::ostream& operator<<(std::ostream& os, Decimal d) { return os << d.str(); }

std::vector<Decimal> allocate_pro_rata(Decimal total, std::span<const Decimal> weights) {
  std::vector<Decimal> parts(weights.size());
  if (weights.empty()) return parts;
  Decimal weight_sum;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].is_negative()) throw Error(ErrorCode::InvalidArgument, "negative pro-rata weight");
    weight_sum += weights[i];
    if (weights[i] > weights[largest]) largest = i;
  }
  if (weight_sum.is_zero()) {
    parts[0] = total;
    return parts;
  }
  Decimal assigned;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    // Truncate toward zero so the dust always has the sign of total.
    const int128 num_sign = total.raw();
    const U256 prod = mul_wide(uabs(num_sign), uabs(weights[i].raw()));
    uint128 rem = 0;
    const uint128 q = div_wide(prod, uabs(weight_sum.raw()), rem);
    const int128 share = static_cast<int128>(q);
    parts[i] = Decimal::from_raw(total.is_negative() ? -share : share);
    assigned += parts[i];
  }
  parts[largest] += total - assigned;
  return parts;
}

}  // namespace gcx
