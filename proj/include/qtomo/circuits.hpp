// Copyright 2026 The qtomo Authors
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

// Elementary two-level rotations embedded in a qudit, gate sequences and the
// Rx Ry Rx Euler form of SU(2).

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "qtomo/errors.hpp"
#include "qtomo/linalg.hpp"
#include "qtomo/qcore.hpp"

namespace qtomo {

enum class Axis { kX, kY };

inline const char* axis_name(Axis a) { return a == Axis::kX ? "x" : "y"; }

/// Rotation exp(-i angle sigma/2) on the level pair (low, high) of a d-level system.
class TwoLevelGate {
 public:
  TwoLevelGate(Axis axis, double angle, int low, int high, int dim)
      : axis_(axis), angle_(angle), low_(low), high_(high), dim_(dim) {
    detail::require(dim >= 2, "TwoLevelGate: dimension must be at least 2");
    detail::require(low >= 0 && high < dim && low < high, "TwoLevelGate: levels must satisfy 0 <= low < high < dim");
    detail::require(std::isfinite(angle), "TwoLevelGate: angle must be finite");
  }

  [[nodiscard]] Axis axis() const { return axis_; }
  [[nodiscard]] double angle() const { return angle_; }
  [[nodiscard]] int low() const { return low_; }
  [[nodiscard]] int high() const { return high_; }
  [[nodiscard]] int dim() const { return dim_; }

  /// 2x2 block acting on (low, high).
  [[nodiscard]] Eigen::Matrix2cd block() const {
    const double c = std::cos(angle_ / 2.0);
    const double s = std::sin(angle_ / 2.0);
    Eigen::Matrix2cd m;
    if (axis_ == Axis::kY) {
      m << c, -s, s, c;
    } else {
      m << c, Complex(0.0, -s), Complex(0.0, -s), c;
    }
    return m;
  }

  friend bool operator==(const TwoLevelGate&, const TwoLevelGate&) = default;

 private:
  Axis axis_;
  double angle_;
  int low_;
  int high_;
  int dim_;
};

/// Gates applied left-to-right in time.
class GateSequence {
 public:
  explicit GateSequence(int dim) : dim_(dim) { detail::require(dim >= 2, "GateSequence: dimension must be at least 2"); }
  GateSequence(int dim, std::vector<TwoLevelGate> gates) : GateSequence(dim) {
    for (auto& g : gates) push_back(std::move(g));
  }

  void push_back(TwoLevelGate g) {
    detail::require(g.dim() == dim_, "GateSequence: gate dimension mismatch");
    gates_.push_back(std::move(g));
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const std::vector<TwoLevelGate>& gates() const { return gates_; }
  [[nodiscard]] std::size_t size() const { return gates_.size(); }
  [[nodiscard]] bool empty() const { return gates_.empty(); }

  friend bool operator==(const GateSequence&, const GateSequence&) = default;

 private:
  int dim_;
  std::vector<TwoLevelGate> gates_;
};

struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

[[nodiscard]] inline UnitaryMatrix gate_unitary(const TwoLevelGate& g) {
  Matrix u = Matrix::Identity(g.dim(), g.dim());
  const Eigen::Matrix2cd b = g.block();
  u(g.low(), g.low()) = b(0, 0);
  u(g.low(), g.high()) = b(0, 1);
  u(g.high(), g.low()) = b(1, 0);
  u(g.high(), g.high()) = b(1, 1);
  return UnitaryMatrix(std::move(u));
}

/// Product G_n ... G_1 for a sequence G_1, ..., G_n; identity when empty.
[[nodiscard]] inline UnitaryMatrix sequence_unitary(const GateSequence& seq) {
  Matrix u = Matrix::Identity(seq.dim(), seq.dim());
  for (const auto& g : seq.gates()) {
    const Eigen::Matrix2cd b = g.block();
    const Eigen::RowVectorXcd lo = u.row(g.low());
    const Eigen::RowVectorXcd hi = u.row(g.high());
    u.row(g.low()) = b(0, 0) * lo + b(0, 1) * hi;
    u.row(g.high()) = b(1, 0) * lo + b(1, 1) * hi;
  }
  return UnitaryMatrix(std::move(u));
}

/// rho -> G rho G^dagger for a single gate, touching only the affected rows/columns.
inline void apply_gate_in_place(const TwoLevelGate& g, Matrix& rho) {
  const Eigen::Matrix2cd b = g.block();
  const int lo = g.low();
  const int hi = g.high();
  {
    const Eigen::RowVectorXcd r0 = rho.row(lo);
    const Eigen::RowVectorXcd r1 = rho.row(hi);
    rho.row(lo) = b(0, 0) * r0 + b(0, 1) * r1;
    rho.row(hi) = b(1, 0) * r0 + b(1, 1) * r1;
  }
  {
    const Eigen::VectorXcd c0 = rho.col(lo);
    const Eigen::VectorXcd c1 = rho.col(hi);
    rho.col(lo) = std::conj(b(0, 0)) * c0 + std::conj(b(0, 1)) * c1;
    rho.col(hi) = std::conj(b(1, 0)) * c0 + std::conj(b(1, 1)) * c1;
  }
}

/// Schroedinger picture: each gate followed by depolarize(., depol_p).
[[nodiscard]] inline Matrix evolve(const GateSequence& seq, Matrix rho, double depol_p = 0.0) {
  for (const auto& g : seq.gates()) {
    apply_gate_in_place(g, rho);
    if (depol_p > 0.0) rho = depolarize_operator(rho, depol_p);
  }
  return rho;
}

/// Heisenberg picture of evolve(): Tr(evolve(seq, rho, p) X) == Tr(rho evolve_adjoint(seq, X, p)).
[[nodiscard]] inline Matrix evolve_adjoint(const GateSequence& seq, Matrix op, double depol_p = 0.0) {
  const auto& gates = seq.gates();
  for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
    if (depol_p > 0.0) op = depolarize_operator(op, depol_p);
    apply_gate_in_place(TwoLevelGate(it->axis(), -it->angle(), it->low(), it->high(), it->dim()), op);
  }
  return op;
}

namespace detail {

inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::remainder(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (std::abs(a) < 1e-15) a = 0.0;
  return a;
}

inline Eigen::Matrix2cd rotation_block(Axis axis, double angle) { return TwoLevelGate(axis, angle, 0, 1, 2).block(); }

inline Eigen::Matrix2cd euler_recompose(const EulerAngles& e) {
  return rotation_block(Axis::kX, e.gamma) * rotation_block(Axis::kY, e.beta) * rotation_block(Axis::kX, e.alpha);
}

}  // namespace detail

/// Angles with Rx(gamma) Ry(beta) Rx(alpha) == u up to a global phase, beta in [0, pi].
///
/// Conjugating by W = Ry(-pi/2) maps Rx to Rz and fixes Ry, reducing the problem
/// to the usual Z-Y-Z form.  At beta = 0 or pi, gamma is set to 0.
[[nodiscard]] inline EulerAngles euler_decompose(const Eigen::Matrix2cd& u) {
  detail::require(u.allFinite(), "euler_decompose: non-finite input");
  detail::require((u.adjoint() * u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() <= 1e-10,
                  "euler_decompose: input is not unitary");
  detail::require(std::abs(u.determinant() - Complex(1.0)) <= 1e-10, "euler_decompose: determinant must be 1");

  const Eigen::Matrix2cd w = detail::rotation_block(Axis::kY, -std::numbers::pi / 2.0);
  const Eigen::Matrix2cd v = w * u * w.adjoint();
  const double c = std::abs(v(0, 0));
  const double s = std::abs(v(1, 0));
  EulerAngles e;
  e.beta = 2.0 * std::atan2(s, c);
  constexpr double kDegenerate = 1e-12;
  if (s < kDegenerate) {
    e.beta = 0.0;
    e.gamma = 0.0;
    e.alpha = -2.0 * std::arg(v(0, 0));
  } else if (c < kDegenerate) {
    e.beta = std::numbers::pi;
    e.gamma = 0.0;
    e.alpha = -2.0 * std::arg(v(1, 0));
  } else {
    const double sum = -2.0 * std::arg(v(0, 0));
    const double diff = 2.0 * std::arg(v(1, 0));
    e.gamma = 0.5 * (sum + diff);
    e.alpha = 0.5 * (sum - diff);
  }
  e.alpha = detail::wrap_angle(e.alpha);
  e.gamma = detail::wrap_angle(e.gamma);
  return e;
}

/// Euler angles whose recomposition equals u exactly (no sign ambiguity); gamma may leave (-pi, pi].
[[nodiscard]] inline EulerAngles euler_decompose_exact(const Eigen::Matrix2cd& u) {
  EulerAngles e = euler_decompose(u);
  const Eigen::Matrix2cd r = detail::euler_recompose(e);
  if ((r - u).cwiseAbs().maxCoeff() > (r + u).cwiseAbs().maxCoeff()) e.gamma += 2.0 * std::numbers::pi;
  return e;
}

/// Human-readable gate label such as "Ry(pi/2)[0,1]".
[[nodiscard]] inline std::string gate_label(const TwoLevelGate& g) {
  const double t = g.angle() / std::numbers::pi;
  std::string angle;
  if (std::abs(t - 1.0) < 1e-12) {
    angle = "pi";
  } else if (std::abs(t - 0.5) < 1e-12) {
    angle = "pi/2";
  } else if (std::abs(t - 1.5) < 1e-12) {
    angle = "3pi/2";
  } else {
    angle = std::to_string(g.angle());
  }
  return std::string("R") + axis_name(g.axis()) + "(" + angle + ")[" + std::to_string(g.low()) + "," +
         std::to_string(g.high()) + "]";
}

}  // namespace qtomo
