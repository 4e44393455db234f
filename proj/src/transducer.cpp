// Copyright 2026 The taskvec Authors. All Rights Reserved.
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

#include "taskvec/transducer.hpp"

#include <cmath>
#include <limits>

#include "taskvec/error.hpp"

namespace taskvec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void CheckShape(const TransducerLattice &lat) {
  if (lat.frames() < 1) ThrowRuntime("transducer lattice needs at least one frame");
  if (lat.log_emit.rows() != lat.log_blank.rows() || lat.log_emit.cols() != lat.symbols())
    ThrowRuntime("transducer lattice: emit/blank shape mismatch");
}

}  // namespace

double LogAddExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

double TransducerNll(const TransducerLattice &lat, LatticeGradient *grad) {
  CheckShape(lat);
  const int T = lat.frames();
  const int U = lat.symbols();
  const auto &lb = lat.log_blank;
  const auto &le = lat.log_emit;

  ad::Matrix alpha(T, U + 1);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) {
        alpha(0, 0) = 0.0;
        continue;
      }
      double a = kNegInf;
      if (t > 0) a = alpha(t - 1, u) + lb(t - 1, u);
      if (u > 0) a = LogAddExp(a, alpha(t, u - 1) + le(t, u - 1));
      alpha(t, u) = a;
    }
  }
  const double log_like = alpha(T - 1, U) + lb(T - 1, U);
  if (!std::isfinite(log_like)) ThrowNumeric("transducer log-likelihood is not finite");
  if (grad == nullptr) return -log_like;

  ad::Matrix beta(T, U + 1);
  for (int t = T - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T - 1 && u == U) {
        beta(t, u) = lb(t, u);
        continue;
      }
      double b = kNegInf;
      if (t < T - 1) b = lb(t, u) + beta(t + 1, u);
      if (u < U) b = LogAddExp(b, le(t, u) + beta(t, u + 1));
      beta(t, u) = b;
    }
  }

  grad->d_blank = ad::Matrix::Zero(T, U + 1);
  grad->d_emit = ad::Matrix::Zero(T, U);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t < T - 1) {
        grad->d_blank(t, u) = -std::exp(alpha(t, u) + lb(t, u) + beta(t + 1, u) - log_like);
      } else if (u == U) {
        grad->d_blank(t, u) = -std::exp(alpha(t, u) + lb(t, u) - log_like);
      }
      if (u < U)
        grad->d_emit(t, u) = -std::exp(alpha(t, u) + le(t, u) + beta(t, u + 1) - log_like);
    }
  }
  return -log_like;
}

uint64_t CountAlignments(int frames, int symbols) {
  if (frames < 1 || symbols < 0) return 0;
  // C(n, k) with n = frames - 1 + symbols, saturating at uint64 max.
  const uint64_t n = static_cast<uint64_t>(frames) - 1 + symbols;
  const uint64_t k = std::min<uint64_t>(symbols, n - symbols);
  unsigned __int128 c = 1;
  for (uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > std::numeric_limits<uint64_t>::max()) return std::numeric_limits<uint64_t>::max();
  }
  return static_cast<uint64_t>(c);
}

double TransducerNllBruteForce(const TransducerLattice &lat, uint64_t max_paths) {
  CheckShape(lat);
  const int T = lat.frames();
  const int U = lat.symbols();
  const uint64_t paths = CountAlignments(T, U);
  if (paths > max_paths) {
    ThrowRuntime("brute-force transducer loss: " + std::to_string(paths) +
                 " alignments exceed the cap of " + std::to_string(max_paths));
  }
  // Depth-first walk over every monotone path from (0, 0) to the final
  // blank out of (T - 1, U), scoring each path independently.
  double total = kNegInf;
  uint64_t visited = 0;
  auto walk = [&](auto &&self, int t, int u, double score) -> void {
    if (t == T - 1 && u == U) {
      total = LogAddExp(total, score + lat.log_blank(t, u));
      ++visited;
      return;
    }
    if (t < T - 1) self(self, t + 1, u, score + lat.log_blank(t, u));
    if (u < U) self(self, t, u + 1, score + lat.log_emit(t, u));
  };
  walk(walk, 0, 0, 0.0);
  TASKVEC_CHECK(visited == paths, "alignment enumeration count mismatch");
  return -total;
}

}  // namespace taskvec
