#pragma once

#include <span>
#include <vector>

namespace dosematch::stats {

double mean(std::span<const double> x);
/// Sample variance (n-1 denominator); 0 for fewer than two values.
double variance(std::span<const double> x);

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
/// `prob` in [0, 1]; `x` need not be sorted. Throws on empty input.
double quantile(std::span<const double> x, double prob);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

/// Student-t CDF with `df` (> 0, may be fractional) degrees of freedom.
double student_t_cdf(double t, double df);
/// P(|T| >= |t|).
double student_t_two_sided_p(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  /// False when both groups have zero variance and different means, so the
  /// statistic is infinite.
  bool defined = true;
};

/// Welch unequal-variance two-sample t-test of mean(a) - mean(b), with
/// Welch-Satterthwaite degrees of freedom. Each group needs >= 2 values.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// 1-based ranks with ties given their average rank.
std::vector<double> average_ranks(std::span<const double> x);

}  // namespace dosematch::stats
