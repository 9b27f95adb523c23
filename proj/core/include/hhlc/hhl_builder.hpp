#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "hhlc/matrix_core.hpp"
#include "hhlc/qcircuit.hpp"

namespace hhlc {

// Largest eigenvalue register we are willing to build.
inline constexpr int kMaxClockQubits = 20;

struct HhlConfig {
  int n_b = 1;
  int n_l = 2;
  double t = 0.0;        // evolution time of e^{iAt}
  double epsilon = 0.25; // 2^{-n_l}
  double lambda_bound = 1.0;
  double kappa = 1.0;

  // Qubit layout: b register [0, n_b), clock [n_b, n_b + n_l), flag last.
  int clock_qubit(int k) const { return n_b + k; }
  int flag_qubit() const { return n_b + n_l; }
  int num_qubits() const { return n_b + n_l + 1; }
};

struct HhlResult {
  Circuit circuit;
  int full_depth = 0;
  HhlConfig config;
  std::optional<double> success_probability;
};

// n_l = max(n_b + 1, ceil(log2 kappa) + 1).
int pe_register_size(double kappa, int n_b);

// Hadamard on each of the n_b solution qubits.
Circuit prepare_b(int n_b);

struct HhlOptions {
  std::optional<int> clock_qubits;  // override the kappa-derived n_l
};

// Full five-stage HHL circuit for a symmetric, invertible A, peephole-reduced.
// Throws DataError for non-symmetric input and NumericError when A is
// singular or the clock register would exceed kMaxClockQubits.
HhlResult build_hhl(const SystemMatrix& a, const HhlOptions& options = {});

int full_depth(const SystemMatrix& a);

// Normalized A^{-1} b.
Eigen::VectorXd classical_solve(const SystemMatrix& a, const Eigen::VectorXd& b);

struct HhlSimulation {
  Eigen::VectorXcd solution;  // post-selected b register, normalized
  double success_probability = 0.0;
  double fidelity = 0.0;      // |<x_classical|solution>|^2
};

// Statevector run of a built circuit with uniform |b>, post-selecting the
// flag in |1> and the clock in |0>.
HhlSimulation simulate_hhl(const HhlResult& result, const SystemMatrix& a);

// The matrix that actually enters the circuit: A itself when symmetric,
// otherwise its dilation.
SystemMatrix prepare_for_hhl(const SystemMatrix& a);

// One line of the depth report.
struct DepthRecord {
  std::string id;
  int n = 0;
  int s = 0;
  double kappa = 0.0;
  int n_l = 0;
  std::optional<int> depth;  // empty when the clock register overflowed
};

DepthRecord measure_depth(const SystemMatrix& a);
nlohmann::json to_json(const DepthRecord& r);

}  // namespace hhlc
