#pragma once

// Exhaustive search for the best single second-order split from the prior.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct StumpSplit {
  int feature = -1;  // -1: no split with positive gain
  double threshold = 0.0;
  double gain = 0.0;
};

/// columns[f][i] numeric, y[i] in {0,1}. Gradients p - y and hessians p(1-p)
/// at the prior p. Ties keep the lowest feature, then the lowest threshold.
inline StumpSplit best_stump(const std::vector<std::vector<double>>& columns, const std::vector<int>& y,
                             double lambda, double gamma, double min_hessian) {
  const std::size_t n = y.size();
  double positives = 0;
  for (int v : y) positives += v;
  const double p = positives / static_cast<double>(n);
  const double h = p * (1 - p);
  auto score = [&](double g, double hs) { return g * g / (hs + lambda); };
  double g_all = 0;
  for (int v : y) g_all += p - v;
  const double h_all = h * static_cast<double>(n);

  StumpSplit best;
  double best_gain = 0.0;
  for (std::size_t f = 0; f < columns.size(); ++f) {
    std::vector<double> values(columns[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = (values[k] + values[k + 1]) / 2;
      double gl = 0, hl = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (columns[f][i] <= t) {
          gl += p - y[i];
          hl += h;
        }
      }
      const double gr = g_all - gl, hr = h_all - hl;
      if (hl < min_hessian || hr < min_hessian) continue;
      const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(g_all, h_all)) - gamma;
      if (gain > best_gain) {
        best_gain = gain;
        best = {static_cast<int>(f), t, gain};
      }
    }
  }
  return best;
}

}  // namespace oracle
