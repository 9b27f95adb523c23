#pragma once

#include <span>

#include <Eigen/Dense>

#include "hhlc/matrix_core.hpp"
#include "hhlc/qcircuit.hpp"

namespace hhlc {

// Dense complex matrix of dimension 2^q.
using UnitaryMatrix = Eigen::MatrixXcd;

inline constexpr int kMaxSynthesisQubits = 6;

bool is_unitary(const UnitaryMatrix& u, double tol = 1e-9);

// min over global phase of ||a - e^{i g} b||_F.
double phase_distance(const UnitaryMatrix& a, const UnitaryMatrix& b);

// e^{iAt} through the symmetric eigendecomposition of A.
UnitaryMatrix matrix_exponential(const SystemMatrix& a, double t);
UnitaryMatrix matrix_exponential(const SymmetricEigen& eig, double t);

// diag(I, ..., I, U): U acts on the low qubits when every one of the
// num_controls high qubits is set.
UnitaryMatrix controlled(const UnitaryMatrix& u, int num_controls);

// Exact recursive Shannon decomposition into {u, cx}. The simulated unitary
// of the result equals `u` up to global phase.
Circuit synthesize(const UnitaryMatrix& u);

enum class RotationAxis { y, z };

// Uniformly controlled rotation: for every value j of the control register
// (bit b of j is controls[b]) apply R_axis(angles[j]) to the target.
// Emits 2^k rotations and 2^k CX in Gray-code order; nothing when every
// angle is zero.
void emit_multiplexed_rotation(Circuit& c, RotationAxis axis, std::span<const double> angles,
                               int target, std::span<const int> controls);

// QFT on the listed qubits (qubits[b] holds bit b), swaps included.
Circuit qft(int num_qubits);

}  // namespace hhlc
