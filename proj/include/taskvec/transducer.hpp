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

#pragma once

#include <cstdint>

#include "taskvec/autodiff.hpp"

namespace taskvec {

// Per-node log-probabilities of a transducer alignment lattice with T frames
// and U target symbols. Node (t, u) means "u symbols emitted, at frame t".
//   log_blank(t, u), u in [0, U]: advance to frame t + 1 without emitting.
//   log_emit(t, u),  u in [0, U): emit target u (0-based) and stay at frame t.
// A complete alignment ends with the blank leaving node (T - 1, U).
struct TransducerLattice {
  ad::Matrix log_blank;  // T x (U + 1)
  ad::Matrix log_emit;   // T x U

  int frames() const { return static_cast<int>(log_blank.rows()); }
  int symbols() const { return static_cast<int>(log_blank.cols()) - 1; }
};

// Gradient of the negative log-likelihood with respect to each lattice entry.
// These are minus the posterior occupancies of the corresponding arcs.
struct LatticeGradient {
  ad::Matrix d_blank;
  ad::Matrix d_emit;
};

double LogAddExp(double a, double b);

// -log sum over all alignments, by the forward recursion
//   alpha(t, u) = logaddexp(alpha(t-1, u) + log_blank(t-1, u),
//                           alpha(t, u-1) + log_emit(t, u-1))
// with NLL = -(alpha(T-1, U) + log_blank(T-1, U)). When `grad` is non-null
// the backward recursion fills it.
double TransducerNll(const TransducerLattice &lattice, LatticeGradient *grad = nullptr);

// Number of distinct alignments: C(T - 1 + U, U).
uint64_t CountAlignments(int frames, int symbols);

// Reference value by explicit enumeration of every alignment. Throws when the
// alignment count exceeds `max_paths`.
double TransducerNllBruteForce(const TransducerLattice &lattice,
                               uint64_t max_paths = 1000000);

}  // namespace taskvec
