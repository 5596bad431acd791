#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

namespace mvgaze::test {

/// Exact rational, small denominators only; enough for PR curves of short
/// label lists.
struct Fraction {
  int64_t num = 0;
  int64_t den = 1;

  static Fraction of(int64_t n, int64_t d) {
    const int64_t g = std::gcd(n < 0 ? -n : n, d);
    return Fraction{n / g, d / g};
  }
  Fraction operator+(const Fraction& o) const {
    return of(num * o.den + o.num * den, den * o.den);
  }
  Fraction operator*(const Fraction& o) const { return of(num * o.num, den * o.den); }
  Fraction operator-(const Fraction& o) const {
    return of(num * o.den - o.num * den, den * o.den);
  }
  double value() const { return double(num) / double(den); }
};

/// Brute-force PR-curve enumeration: for every distinct threshold, recount
/// precision and recall over the whole list, then integrate
/// sum (R_k - R_{k-1}) * P_k in exact arithmetic.
inline double brute_force_average_precision(const std::vector<double>& scores,
                                            const std::vector<bool>& labels) {
  const int64_t positives = std::count(labels.begin(), labels.end(), true);
  std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
  Fraction ap{0, 1};
  Fraction prev_recall{0, 1};
  for (double t : thresholds) {
    int64_t tp = 0, predicted = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        ++predicted;
        if (labels[i]) ++tp;
      }
    }
    const Fraction precision = Fraction::of(tp, predicted);
    const Fraction recall = Fraction::of(tp, positives);
    ap = ap + (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap.value();
}

}  // namespace mvgaze::test
