#pragma once

#include <span>
#include <vector>

namespace neuronlab {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); zero for n < 2.
double stddev(std::span<const double> xs);
MeanSe mean_se(std::span<const double> xs);

/// Linear-interpolation quantile (R type 7). q in [0, 1].
double quantile(std::vector<double> xs, double q);
double median(std::vector<double> xs);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

/// Ordinary least squares of y on x; needs at least two distinct x.
LineFit ols(std::span<const double> x, std::span<const double> y);
/// OLS of log y on log x.
LineFit loglog_fit(std::span<const double> x, std::span<const double> y);

}  // namespace neuronlab
