#pragma once

#include <vector>

namespace spindecay {

struct ChiSquareResult {
  double statistic = 0;
  int dof = 0;
  double critical = 0;
  bool pass = true;
  int bins = 0;
};

// Pearson test of counts against expected probabilities. Bins with expected
// count below min_expected are pooled. alpha = 0.0027 is the 3-sigma level.
ChiSquareResult chi_square_test(const std::vector<long long>& observed,
                                const std::vector<double>& expected_prob, double alpha = 0.0027,
                                double min_expected = 5.0);

double chi_square_quantile(int dof, double p);

struct Fit {
  double slope = 0;
  double intercept = 0;
  double residual = 0;  // root mean square
};

Fit least_squares(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& xs);
double standard_error(const std::vector<double>& xs);
double median(std::vector<double> xs);

}  // namespace spindecay
