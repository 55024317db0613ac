#pragma once

#include <span>
#include <stdexcept>

namespace medlfrm {

// Raised when AUC is requested for labels of a single class.
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Area under the ROC curve, P(s+ > s-) + P(s+ = s-)/2, from mid-ranks.
// labels must be +1 / -1 and contain both classes.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace medlfrm
