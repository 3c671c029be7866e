#include "aesthetics/baselines/metrics.hpp"

#include <json.hpp>

#include "aesthetics/error.hpp"

namespace aesthetics::baselines {

Metrics compute_metrics(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw ShapeError("predicted and actual differ in length");
  if (predicted.empty()) throw DomainError("metrics need at least one sample");
  Metrics m;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == 1;
    const bool a = actual[i] == 1;
    if (p && a) ++m.tp;
    if (p && !a) ++m.fp;
    if (!p && a) ++m.fn;
    if (!p && !a) ++m.tn;
  }
  const auto n = static_cast<double>(predicted.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / n;
  if (m.tp + m.fp > 0) {
    m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  } else {
    m.zero_division = true;
  }
  if (m.tp + m.fn > 0) {
    m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  } else {
    m.zero_division = true;
  }
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

std::string metrics_to_json(const Metrics& m) {
  nlohmann::json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["accuracy"] = m.accuracy;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  j["tn"] = m.tn;
  j["zero_division"] = m.zero_division;
  return j.dump();
}

}  // namespace aesthetics::baselines
