// Copyright 2026 The convfeat Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "testing/oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace convfeat::testing {

std::vector<double> NaiveGemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                              std::size_t k, double alpha, const std::vector<double>& a,
                              const std::vector<double>& b, double beta,
                              std::vector<double> c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a ? a[p * m + i] : a[i * k + p];
        const double bv = trans_b ? b[j * k + p] : b[p * n + j];
        s += av * bv;
      }
      c[i * n + j] = alpha * s + beta * c[i * n + j];
    }
  }
  return c;
}

GradCheck CheckGradient(const std::function<double(const std::vector<double>&)>& loss,
                        const std::vector<double>& x, const std::vector<double>& analytic,
                        std::size_t coords, std::mt19937_64& rng, double step) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (coords < idx.size()) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(coords);
  }
  GradCheck result;
  std::vector<double> probe = x;
  for (std::size_t i : idx) {
    probe[i] = x[i] + step;
    const double up = loss(probe);
    probe[i] = x[i] - step;
    const double down = loss(probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * step);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    result.max_rel_error = std::max(result.max_rel_error, err);
    ++result.coords;
  }
  return result;
}

double NearestNeighborAgreement(const std::vector<double>& xy,
                                const std::vector<std::string>& groups) {
  const std::size_t n = groups.size();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t nn = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = xy[2 * i] - xy[2 * j];
      const double dy = xy[2 * i + 1] - xy[2 * j + 1];
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        nn = j;
      }
    }
    if (groups[nn] == groups[i]) ++agree;
  }
  return n == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(n);
}

bool RunningAverageNonIncreasing(const std::vector<double>& trace, double tolerance,
                                 double floor) {
  constexpr std::size_t kWindow = 5;
  double previous = 0.0;
  for (std::size_t e = 0; e < trace.size(); ++e) {
    const std::size_t lo = e + 1 >= kWindow ? e + 1 - kWindow : 0;
    double sum = 0.0;
    for (std::size_t i = lo; i <= e; ++i) sum += trace[i];
    const double avg = sum / static_cast<double>(e + 1 - lo);
    if (e > 0 && avg > previous + std::max(tolerance * previous, floor)) return false;
    previous = avg;
  }
  return true;
}

}  // namespace convfeat::testing
