#include "hhlc/hhl_builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "hhlc/error.hpp"
#include "hhlc/synthesis.hpp"

namespace hhlc {

namespace {

constexpr double kPi = std::numbers::pi;

// Clock value j in [0, 2^n_l) read as a signed eigenvalue index. The top
// value 2^{n_l-1} is kept positive: it is where lambda = lambda_bound lands.
long signed_clock(long j, int n_l) {
  const long size = 1L << n_l;
  return j > size / 2 ? j - size : j;
}

Circuit phase_estimation(const SymmetricEigen& eig, const HhlConfig& cfg) {
  Circuit c(cfg.num_qubits());
  for (int k = 0; k < cfg.n_l; ++k) c.add(Gate::h(cfg.clock_qubit(k)));

  std::vector<int> map(static_cast<std::size_t>(cfg.n_b + 1));
  std::iota(map.begin(), map.end() - 1, 0);
  for (int k = 0; k < cfg.n_l; ++k) {
    const UnitaryMatrix power = matrix_exponential(eig, cfg.t * std::ldexp(1.0, k));
    map.back() = cfg.clock_qubit(k);
    c.append(synthesize(controlled(power, 1)), map);
  }

  std::vector<int> clock(static_cast<std::size_t>(cfg.n_l));
  for (int k = 0; k < cfg.n_l; ++k) clock[static_cast<std::size_t>(k)] = cfg.clock_qubit(k);
  c.append(inverse(qft(cfg.n_l)), clock);
  return c;
}

Circuit eigenvalue_inversion(const HhlConfig& cfg) {
  Circuit c(cfg.num_qubits());
  const long size = 1L << cfg.n_l;
  std::vector<double> angles(static_cast<std::size_t>(size), 0.0);
  for (long j = 0; j < size; ++j) {
    const long jp = signed_clock(j, cfg.n_l);
    if (jp != 0) angles[static_cast<std::size_t>(j)] = 2.0 * std::asin(1.0 / static_cast<double>(jp));
  }
  std::vector<int> clock(static_cast<std::size_t>(cfg.n_l));
  for (int k = 0; k < cfg.n_l; ++k) clock[static_cast<std::size_t>(k)] = cfg.clock_qubit(k);
  emit_multiplexed_rotation(c, RotationAxis::y, angles, cfg.flag_qubit(), clock);
  return c;
}

// The clock is read as signed, so lambda t / 2pi must stay in (-1/2, 1/2].
// The Gershgorin interval (capped by the Frobenius norm) bounds both signs;
// the wider side is mapped onto the top clock value 2^{n_l-1}, which is
// exact for eigenvalues like 1 and 1/2, and the narrower side keeps one bin
// clear of the wrap-around point. A negative t is harmless: it only flips the
// global sign of the solution.
double evolution_time(const Eigen::MatrixXd& a, int n_l, double& lambda_bound) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double radius = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
    lo = std::min(lo, a(i, i) - radius);
    hi = std::max(hi, a(i, i) + radius);
  }
  const double frob = a.norm();
  double major = std::clamp(hi, 0.0, frob);
  double minor = std::clamp(-lo, 0.0, frob);
  double sign = 1.0;
  if (minor > major) {
    std::swap(major, minor);
    sign = -1.0;
  }
  lambda_bound = major;
  const double top = std::ldexp(1.0, n_l - 1);
  double t = kPi / major;
  if (minor > 0.0) t = std::min(t, kPi * (top - 1.0) / (top * minor));
  return sign * t;
}

}  // namespace

int pe_register_size(double kappa, int n_b) {
  if (!(kappa >= 1.0)) throw DataError("pe_register_size: kappa must be >= 1");
  const int from_kappa = static_cast<int>(std::ceil(std::log2(kappa))) + 1;
  return std::max(n_b + 1, from_kappa);
}

Circuit prepare_b(int n_b) {
  Circuit c(n_b);
  for (int q = 0; q < n_b; ++q) c.add(Gate::h(q));
  return c;
}

HhlResult build_hhl(const SystemMatrix& a, const HhlOptions& options) {
  if (!a.is_symmetric()) throw DataError("build_hhl: matrix is not symmetric; dilate it first");
  if (!is_power_of_two(a.n()) || a.n() < 2) throw DataError("build_hhl: matrix size must be a power of two >= 2");

  const SymmetricEigen eig = jacobi_eigen(a.elements());
  const Eigen::VectorXd mags = eig.values.cwiseAbs();
  if (mags.minCoeff() < kSingularTolerance * mags.maxCoeff()) throw NumericError("build_hhl: matrix is singular");

  HhlConfig cfg;
  cfg.n_b = log2_exact(a.n());
  cfg.kappa = mags.maxCoeff() / mags.minCoeff();
  cfg.n_l = options.clock_qubits.value_or(pe_register_size(cfg.kappa, cfg.n_b));
  if (cfg.n_l < 1) throw DataError("build_hhl: clock register needs at least one qubit");
  if (cfg.n_l > kMaxClockQubits) {
    throw NumericError("build_hhl: register overflow, " + std::to_string(cfg.n_l) + " clock qubits needed (limit " +
                       std::to_string(kMaxClockQubits) + ")");
  }
  cfg.epsilon = std::ldexp(1.0, -cfg.n_l);
  cfg.t = evolution_time(a.elements(), cfg.n_l, cfg.lambda_bound);

  const Circuit qpe = phase_estimation(eig, cfg);
  Circuit c(cfg.num_qubits());
  c.append(prepare_b(cfg.n_b));
  c.append(qpe);
  c.append(eigenvalue_inversion(cfg));
  c.append(inverse(qpe));

  HhlResult result;
  result.circuit = peephole(c);
  result.full_depth = depth(result.circuit);
  result.config = cfg;
  return result;
}

int full_depth(const SystemMatrix& a) { return build_hhl(a).full_depth; }

Eigen::VectorXd classical_solve(const SystemMatrix& a, const Eigen::VectorXd& b) {
  if (b.size() != a.n()) throw DataError("classical_solve: right-hand side length mismatch");
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a.elements());
  const Eigen::VectorXd sv = singular_values(a.elements());
  if (sv(0) == 0.0 || sv(sv.size() - 1) < kSingularTolerance * sv(0)) throw NumericError("classical_solve: matrix is singular");
  Eigen::VectorXd x = lu.solve(b);
  const double norm = x.norm();
  if (norm == 0.0) throw DataError("classical_solve: zero right-hand side");
  return x / norm;
}

HhlSimulation simulate_hhl(const HhlResult& result, const SystemMatrix& a) {
  const HhlConfig& cfg = result.config;
  const Eigen::Index dim = Eigen::Index{1} << cfg.num_qubits();
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  psi(0) = 1.0;
  psi = simulate(result.circuit, psi);

  const Eigen::Index nb_dim = Eigen::Index{1} << cfg.n_b;
  const Eigen::Index flag_bit = Eigen::Index{1} << cfg.flag_qubit();
  HhlSimulation sim;
  sim.solution = psi.segment(flag_bit, nb_dim);  // flag = 1, clock = 0
  sim.success_probability = sim.solution.squaredNorm();
  if (sim.success_probability > 0.0) sim.solution /= std::sqrt(sim.success_probability);

  const Eigen::VectorXd b = Eigen::VectorXd::Constant(nb_dim, 1.0 / std::sqrt(static_cast<double>(nb_dim)));
  const Eigen::VectorXcd x = classical_solve(a, b).cast<Complex>();
  sim.fidelity = std::norm(x.dot(sim.solution));
  return sim;
}

SystemMatrix prepare_for_hhl(const SystemMatrix& a) { return a.is_symmetric() ? a : dilate(a); }

DepthRecord measure_depth(const SystemMatrix& a) {
  DepthRecord r;
  r.id = a.id();
  r.n = a.n();
  r.s = sparsity(a);
  r.kappa = condition_number(a);
  const SystemMatrix target = prepare_for_hhl(a);
  r.n_l = pe_register_size(r.kappa, log2_exact(target.n()));
  if (r.n_l <= kMaxClockQubits) r.depth = build_hhl(target).full_depth;
  return r;
}

nlohmann::json to_json(const DepthRecord& r) {
  nlohmann::json j = {{"id", r.id}, {"n", r.n}, {"s", r.s}, {"kappa", r.kappa}, {"n_l", r.n_l}};
  j["depth"] = r.depth ? nlohmann::json(*r.depth) : nlohmann::json(nullptr);
  return j;
}

}  // namespace hhlc
