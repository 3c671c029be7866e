#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace aesthetics::baselines {

struct Metrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  // Set when precision or recall had a zero denominator and was reported as 0.
  bool zero_division = false;
};

// Binary metrics with class 1 as the positive class.
Metrics compute_metrics(std::span<const int> predicted, std::span<const int> actual);

std::string metrics_to_json(const Metrics& m);

}  // namespace aesthetics::baselines
