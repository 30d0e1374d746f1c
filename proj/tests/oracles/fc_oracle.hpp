#pragma once

// Plain-loop fully connected layers and the ZSL compositions built on them.

#include <cmath>
#include <limits>
#include <vector>

#include "kcse/matrix.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline Vec fc(const kcse::Matrix& w, const kcse::Matrix& b, const Vec& x, bool relu) {
  Vec y(w.rows());
  for (std::size_t o = 0; o < w.rows(); ++o) {
    double s = b(0, o);
    for (std::size_t k = 0; k < w.cols(); ++k) s += w(o, k) * x[k];
    y[o] = relu && s < 0 ? 0.0 : s;
  }
  return y;
}

inline Vec concat(Vec a, const Vec& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline Vec row(const kcse::Matrix& m, std::size_t r) { return {m.row(r).begin(), m.row(r).end()}; }

inline std::size_t nearest(const std::vector<Vec>& prototypes, const Vec& q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < prototypes.size(); ++j) {
    double d = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) d += (q[k] - prototypes[j][k]) * (q[k] - prototypes[j][k]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

inline std::size_t argmax(const Vec& v) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < v.size(); ++j)
    if (v[j] > v[best]) best = j;
  return best;
}

}  // namespace oracle
