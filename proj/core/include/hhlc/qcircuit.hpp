#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace hhlc {

using Complex = std::complex<double>;

enum class GateKind { u, cx };

// Elementary gate. A `u` gate is
//   e^{i phase} * [[cos(t/2),            -e^{i lam} sin(t/2)],
//                  [e^{i phi} sin(t/2),   e^{i(phi+lam)} cos(t/2)]]
// acting on q0. A `cx` gate has control q0 and target q1.
struct Gate {
  GateKind kind = GateKind::u;
  int q0 = 0;
  int q1 = -1;
  double theta = 0.0;
  double phi = 0.0;
  double lambda = 0.0;
  double phase = 0.0;

  static Gate u(int q, double theta, double phi, double lambda, double phase = 0.0);
  static Gate cx(int control, int target);
  static Gate h(int q);
  static Gate x(int q);
  static Gate ry(int q, double angle);
  static Gate rz(int q, double angle);
  static Gate p(int q, double angle);

  // 2x2 matrix of a `u` gate.
  Eigen::Matrix2cd matrix() const;
  Gate inverse() const;
  // True for a `u` gate equal to the identity up to global phase.
  bool is_identity(double tol = 1e-12) const;
  int arity() const { return kind == GateKind::cx ? 2 : 1; }
};

// ZYZ Euler decomposition of a 2x2 unitary into a single `u` gate on q.
Gate euler_gate(const Eigen::Matrix2cd& m, int q);

class Circuit {
 public:
  Circuit() = default;
  explicit Circuit(int num_qubits);

  int num_qubits() const { return num_qubits_; }
  const std::vector<Gate>& gates() const { return gates_; }
  std::size_t size() const { return gates_.size(); }
  bool empty() const { return gates_.empty(); }

  void add(const Gate& g);
  // Append `other`, mapping its qubit k onto qubit_map[k] of this circuit.
  void append(const Circuit& other, std::span<const int> qubit_map);
  void append(const Circuit& other);
  void reserve(std::size_t n) { gates_.reserve(n); }

 private:
  int num_qubits_ = 0;
  std::vector<Gate> gates_;
};

// Critical-path length with greedy ASAP layering.
int depth(const Circuit& c);

Circuit compose(const Circuit& first, const Circuit& second);
Circuit inverse(const Circuit& c);

// Merges adjacent single-qubit gates, drops identity rotations and cancels
// back-to-back identical CX pairs.
Circuit peephole(const Circuit& c);

// Statevector simulation; qubit k is bit k of the basis index.
Eigen::VectorXcd simulate(const Circuit& c, const Eigen::VectorXcd& input);

// Full unitary by simulating every basis state (small circuits only).
Eigen::MatrixXcd circuit_unitary(const Circuit& c);

// `GATE kind targets params` lines.
std::string dump(const Circuit& c);
// {"depth", "gates", "qubits"}
nlohmann::json summary(const Circuit& c);

inline constexpr int kMaxSimulationQubits = 20;

}  // namespace hhlc
