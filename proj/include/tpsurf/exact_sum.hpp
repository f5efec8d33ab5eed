#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace tpsurf {

/// Order-independent floating-point accumulator.
///
/// Every added double is deposited exactly into a long fixed-point integer
/// (32-bit digits held in int64 slots so carries can be deferred). Because the
/// stored integer is the exact sum, the result does not depend on the order in
/// which terms were added or on how partial accumulators were merged. This is
/// what makes energies reproducible across thread counts and point orderings.
class ExactSum {
 public:
  void add(double v) {
    if (v == 0.0) return;
    if (!std::isfinite(v)) {
      if (std::isnan(v)) {
        nan_ = true;
      } else if (v > 0) {
        pos_inf_ = true;
      } else {
        neg_inf_ = true;
      }
      return;
    }
    int exp = 0;
    const double frac = std::frexp(std::fabs(v), &exp);
    // |v| = mant * 2^(exp - 53), mant a 53-bit integer (subnormals included).
    auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
    int bit = exp - 53 + kBias;
    if (bit < 0) {
      // Only reachable for subnormals; the low bits are zero.
      mant >>= -bit;
      bit = 0;
    }
    const int k = bit / 32;
    const int r = bit % 32;
    const unsigned __int128 t = static_cast<unsigned __int128>(mant) << r;
    const std::int64_t sign = v < 0 ? -1 : 1;
    digits_[k] += sign * static_cast<std::int64_t>(t & kMask);
    digits_[k + 1] += sign * static_cast<std::int64_t>((t >> 32) & kMask);
    digits_[k + 2] += sign * static_cast<std::int64_t>(t >> 64);
    if (++pending_ >= kNormalizeEvery) normalize();
  }

  ExactSum& operator+=(double v) {
    add(v);
    return *this;
  }

  void merge(const ExactSum& other) {
    ExactSum o = other;
    o.normalize();
    normalize();
    for (std::size_t i = 0; i < kDigits; ++i) digits_[i] += o.digits_[i];
    nan_ = nan_ || o.nan_;
    pos_inf_ = pos_inf_ || o.pos_inf_;
    neg_inf_ = neg_inf_ || o.neg_inf_;
    normalize();
  }

  /// Deterministic function of the exact sum (within a couple of ulp of it).
  double value() const {
    if (nan_ || (pos_inf_ && neg_inf_)) return std::numeric_limits<double>::quiet_NaN();
    if (pos_inf_) return std::numeric_limits<double>::infinity();
    if (neg_inf_) return -std::numeric_limits<double>::infinity();
    ExactSum c = *this;
    c.normalize();
    long double acc = 0.0L;
    for (std::size_t i = kDigits; i-- > 0;) {
      if (c.digits_[i] != 0) {
        acc += std::ldexp(static_cast<long double>(c.digits_[i]), static_cast<int>(32 * i) - kBias);
      }
    }
    return static_cast<double>(acc);
  }

 private:
  static constexpr int kBias = 1074;
  static constexpr std::size_t kDigits = 72;
  static constexpr std::uint64_t kMask = 0xffffffffULL;
  static constexpr std::int64_t kNormalizeEvery = std::int64_t{1} << 29;

  void normalize() {
    std::int64_t carry = 0;
    for (std::size_t i = 0; i < kDigits; ++i) {
      std::int64_t d = digits_[i] + carry;
      carry = d >> 32;  // arithmetic shift: floor division by 2^32
      digits_[i] = d - (carry << 32);
    }
    digits_[kDigits - 1] += carry << 32;
    pending_ = 0;
  }

  std::array<std::int64_t, kDigits> digits_{};
  std::int64_t pending_ = 0;
  bool nan_ = false;
  bool pos_inf_ = false;
  bool neg_inf_ = false;
};

}  // namespace tpsurf
