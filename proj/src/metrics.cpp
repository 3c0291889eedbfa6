#include "pianomime/metrics.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace pianomime {

Metrics compute_metrics(const PianoStateTrajectory& played, const PianoStateTrajectory& goal) {
  if (played.frames.size() != goal.frames.size())
    throw std::invalid_argument("compute_metrics: frame count mismatch (" +
                                std::to_string(played.frames.size()) + " vs " +
                                std::to_string(goal.frames.size()) + ")");
  Metrics m;
  for (std::size_t t = 0; t < goal.frames.size(); ++t) {
    for (std::size_t k = 0; k < kNumKeys; ++k) {
      const bool p = played.frames[t].keys[k] != 0;
      const bool g = goal.frames[t].keys[k] != 0;
      if (p && g) ++m.true_positives;
      else if (p && !g) ++m.false_positives;
      else if (!p && g) ++m.false_negatives;
    }
  }
  m.precision = m.true_positives + m.false_positives == 0
                    ? 1.0
                    : static_cast<double>(m.true_positives) /
                          static_cast<double>(m.true_positives + m.false_positives);
  m.recall = m.true_positives + m.false_negatives == 0
                 ? 1.0
                 : static_cast<double>(m.true_positives) /
                       static_cast<double>(m.true_positives + m.false_negatives);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

void write_metrics_json(const std::string& path, const Metrics& m) {
  nlohmann::json j;
  j["true_positives"] = m.true_positives;
  j["false_positives"] = m.false_positives;
  j["false_negatives"] = m.false_negatives;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace pianomime
