#include "hhlc/synthesis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hhlc/error.hpp"

namespace hhlc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kIdentityTol = 1e-12;
constexpr double kAngleTol = 1e-12;

bool is_identity_up_to_phase(const UnitaryMatrix& u) {
  return phase_distance(u, UnitaryMatrix::Identity(u.rows(), u.cols())) <
         kIdentityTol * std::sqrt(static_cast<double>(u.rows()));
}

struct CosineSine {
  UnitaryMatrix l0, l1, r0, r1;
  std::vector<double> theta;  // CS angles; the middle factor is RY(2 theta_i)
};

// u = diag(l0, l1) * [[C, -S], [S, C]] * diag(r0, r1)
CosineSine cosine_sine(const UnitaryMatrix& u) {
  const Eigen::Index h = u.rows() / 2;
  const UnitaryMatrix u00 = u.topLeftCorner(h, h);
  const UnitaryMatrix u01 = u.topRightCorner(h, h);
  const UnitaryMatrix u10 = u.bottomLeftCorner(h, h);
  const UnitaryMatrix u11 = u.bottomRightCorner(h, h);

  Eigen::JacobiSVD<UnitaryMatrix> svd(u00, Eigen::ComputeFullU | Eigen::ComputeFullV);
  CosineSine cs;
  cs.l0 = svd.matrixU();
  cs.r0 = svd.matrixV().adjoint();
  const Eigen::VectorXd c = svd.singularValues().cwiseMin(1.0);

  // Columns of m are mutually orthogonal with norms sin(theta_i).
  const UnitaryMatrix m = u10 * svd.matrixV();
  cs.l1 = UnitaryMatrix::Zero(h, h);
  std::vector<double> s(static_cast<std::size_t>(h), 0.0);
  std::vector<bool> filled(static_cast<std::size_t>(h), false);
  // Largest sines first: their directions are the best determined.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(h));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return m.col(a).norm() > m.col(b).norm(); });
  auto orthogonalize = [&](Eigen::VectorXcd v) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < h; ++k) {
        if (filled[static_cast<std::size_t>(k)]) v -= cs.l1.col(k) * cs.l1.col(k).dot(v);
      }
    }
    return v;
  };
  for (Eigen::Index i : order) {
    Eigen::VectorXcd v = orthogonalize(m.col(i));
    if (v.norm() < 1e-13) {
      // Direction undetermined: complete with the first usable basis vector.
      for (Eigen::Index e = 0; e < h; ++e) {
        Eigen::VectorXcd basis = Eigen::VectorXcd::Zero(h);
        basis(e) = 1.0;
        v = orthogonalize(basis);
        if (v.norm() > 0.5) break;
      }
    }
    v.normalize();
    const Complex z = v.dot(m.col(i));  // v^H m_i
    if (std::abs(z) > 0.0) v *= z / std::abs(z);
    cs.l1.col(i) = v;
    s[static_cast<std::size_t>(i)] = std::abs(z);
    filled[static_cast<std::size_t>(i)] = true;
  }

  cs.theta.resize(static_cast<std::size_t>(h));
  cs.r1.resize(h, h);
  for (Eigen::Index i = 0; i < h; ++i) {
    const double th = std::atan2(s[static_cast<std::size_t>(i)], c(i));
    cs.theta[static_cast<std::size_t>(i)] = th;
    const double ct = std::cos(th);
    const double st = std::sin(th);
    if (ct >= st) {
      cs.r1.row(i) = (cs.l1.col(i).adjoint() * u11) / ct;
    } else {
      cs.r1.row(i) = -(cs.l0.col(i).adjoint() * u01) / st;
    }
  }
  return cs;
}

void emit_unitary(Circuit& c, const UnitaryMatrix& u, std::span<const int> qubits);

// diag(u0, u1) with the top qubit as selector
//   = (I (x) V) (D (+) D^H) (I (x) W),  u0 u1^H = V D^2 V^H.
void emit_block_diagonal(Circuit& c, const UnitaryMatrix& u0, const UnitaryMatrix& u1,
                         std::span<const int> qubits) {
  const auto lower = qubits.first(qubits.size() - 1);
  const int top = qubits.back();
  const UnitaryMatrix x = u0 * u1.adjoint();
  Eigen::ComplexSchur<UnitaryMatrix> schur(x);
  const UnitaryMatrix& v = schur.matrixU();
  const Eigen::Index h = u0.rows();
  Eigen::VectorXcd d(h);
  std::vector<double> rz(static_cast<std::size_t>(h));
  for (Eigen::Index i = 0; i < h; ++i) {
    Complex root = std::sqrt(schur.matrixT()(i, i));
    root /= std::abs(root);
    d(i) = root;
    rz[static_cast<std::size_t>(i)] = -2.0 * std::arg(root);
  }
  const UnitaryMatrix w = d.asDiagonal() * (v.adjoint() * u1);
  emit_unitary(c, w, lower);
  emit_multiplexed_rotation(c, RotationAxis::z, rz, top, lower);
  emit_unitary(c, v, lower);
}

void emit_unitary(Circuit& c, const UnitaryMatrix& u, std::span<const int> qubits) {
  if (is_identity_up_to_phase(u)) return;
  if (qubits.size() == 1) {
    const Gate g = euler_gate(u, qubits[0]);
    if (!g.is_identity()) c.add(g);
    return;
  }
  const CosineSine cs = cosine_sine(u);
  std::vector<double> ry(cs.theta.size());
  std::transform(cs.theta.begin(), cs.theta.end(), ry.begin(), [](double t) { return 2.0 * t; });

  // Circuit order is right to left in the factorization.
  emit_block_diagonal(c, cs.r0, cs.r1, qubits);
  emit_multiplexed_rotation(c, RotationAxis::y, ry, qubits.back(), qubits.first(qubits.size() - 1));
  emit_block_diagonal(c, cs.l0, cs.l1, qubits);
}

// In-place fast Walsh-Hadamard transform.
void walsh_hadamard(std::vector<double>& a) {
  for (std::size_t len = 1; len < a.size(); len <<= 1) {
    for (std::size_t i = 0; i < a.size(); i += 2 * len) {
      for (std::size_t j = i; j < i + len; ++j) {
        const double x = a[j];
        const double y = a[j + len];
        a[j] = x + y;
        a[j + len] = x - y;
      }
    }
  }
}

void add_controlled_phase(Circuit& c, double angle, int control, int target) {
  c.add(Gate::p(control, angle / 2));
  c.add(Gate::cx(control, target));
  c.add(Gate::p(target, -angle / 2));
  c.add(Gate::cx(control, target));
  c.add(Gate::p(target, angle / 2));
}

void add_swap(Circuit& c, int a, int b) {
  c.add(Gate::cx(a, b));
  c.add(Gate::cx(b, a));
  c.add(Gate::cx(a, b));
}

}  // namespace

bool is_unitary(const UnitaryMatrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return (u * u.adjoint() - UnitaryMatrix::Identity(u.rows(), u.cols())).norm() <= tol;
}

double phase_distance(const UnitaryMatrix& a, const UnitaryMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError("phase_distance: shape mismatch");
  const Complex overlap = (b.adjoint() * a).trace();
  const Complex align = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex{1.0, 0.0};
  return (a - align * b).norm();
}

UnitaryMatrix matrix_exponential(const SymmetricEigen& eig, double t) {
  const Eigen::Index n = eig.values.size();
  Eigen::VectorXcd phases(n);
  for (Eigen::Index k = 0; k < n; ++k) phases(k) = std::polar(1.0, eig.values(k) * t);
  const UnitaryMatrix v = eig.vectors.cast<Complex>();
  return v * phases.asDiagonal() * v.transpose();
}

UnitaryMatrix matrix_exponential(const SystemMatrix& a, double t) {
  if (!a.is_symmetric()) throw DataError("matrix_exponential: matrix is not symmetric");
  return matrix_exponential(jacobi_eigen(a.elements()), t);
}

UnitaryMatrix controlled(const UnitaryMatrix& u, int num_controls) {
  if (num_controls < 1) throw DataError("controlled: need at least one control");
  if (u.rows() != u.cols() || !is_power_of_two(static_cast<int>(u.rows()))) {
    throw DataError("controlled: operand must be a square 2^q matrix");
  }
  const int q = log2_exact(static_cast<int>(u.rows()));
  if (q + num_controls > kMaxSynthesisQubits) {
    throw DataError("controlled: " + std::to_string(q + num_controls) + " qubits exceeds the limit of " +
                    std::to_string(kMaxSynthesisQubits));
  }
  const Eigen::Index dim = u.rows() << num_controls;
  UnitaryMatrix out = UnitaryMatrix::Identity(dim, dim);
  out.bottomRightCorner(u.rows(), u.cols()) = u;
  return out;
}

Circuit synthesize(const UnitaryMatrix& u) {
  if (u.rows() != u.cols() || !is_power_of_two(static_cast<int>(u.rows())) || u.rows() < 2) {
    throw DataError("synthesize: operand must be a square 2^q matrix with q >= 1");
  }
  const int q = log2_exact(static_cast<int>(u.rows()));
  if (q > kMaxSynthesisQubits) throw DataError("synthesize: more than 6 qubits");
  if (!is_unitary(u)) throw DataError("synthesize: matrix is not unitary");
  Circuit c(q);
  std::vector<int> qubits(static_cast<std::size_t>(q));
  std::iota(qubits.begin(), qubits.end(), 0);
  emit_unitary(c, u, qubits);
  return peephole(c);
}

void emit_multiplexed_rotation(Circuit& c, RotationAxis axis, std::span<const double> angles,
                               int target, std::span<const int> controls) {
  const std::size_t k = controls.size();
  const std::size_t n = std::size_t{1} << k;
  if (angles.size() != n) throw DataError("emit_multiplexed_rotation: need 2^k angles");
  if (std::all_of(angles.begin(), angles.end(), [](double a) { return std::abs(a) < kAngleTol; })) return;

  auto rotation = [&](double angle) {
    return axis == RotationAxis::y ? Gate::ry(target, angle) : Gate::rz(target, angle);
  };
  if (k == 0) {
    c.add(rotation(angles[0]));
    return;
  }
  std::vector<double> spectrum(angles.begin(), angles.end());
  walsh_hadamard(spectrum);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gray = i ^ (i >> 1);
    const double theta = spectrum[gray] / static_cast<double>(n);
    if (std::abs(theta) >= kAngleTol) c.add(rotation(theta));
    const std::size_t flip = (i + 1 == n) ? k - 1 : static_cast<std::size_t>(std::countr_zero(i + 1));
    c.add(Gate::cx(controls[flip], target));
  }
}

Circuit qft(int num_qubits) {
  Circuit c(num_qubits);
  for (int i = num_qubits - 1; i >= 0; --i) {
    c.add(Gate::h(i));
    for (int m = i - 1; m >= 0; --m) add_controlled_phase(c, kPi / std::ldexp(1.0, i - m), m, i);
  }
  for (int i = 0; i < num_qubits / 2; ++i) add_swap(c, i, num_qubits - 1 - i);
  return c;
}

}  // namespace hhlc
