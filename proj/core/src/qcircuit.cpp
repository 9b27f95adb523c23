#include "hhlc/qcircuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hhlc/error.hpp"

namespace hhlc {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a;
}

}  // namespace

Gate Gate::u(int q, double theta, double phi, double lambda, double phase) {
  Gate g;
  g.kind = GateKind::u;
  g.q0 = q;
  g.theta = theta;
  g.phi = phi;
  g.lambda = lambda;
  g.phase = phase;
  return g;
}

Gate Gate::cx(int control, int target) {
  Gate g;
  g.kind = GateKind::cx;
  g.q0 = control;
  g.q1 = target;
  return g;
}

Gate Gate::h(int q) { return u(q, kPi / 2, 0.0, kPi); }
Gate Gate::x(int q) { return u(q, kPi, 0.0, kPi); }
Gate Gate::ry(int q, double angle) { return u(q, angle, 0.0, 0.0); }
Gate Gate::rz(int q, double angle) { return u(q, 0.0, 0.0, angle, -angle / 2); }
Gate Gate::p(int q, double angle) { return u(q, 0.0, 0.0, angle); }

Eigen::Matrix2cd Gate::matrix() const {
  const double c = std::cos(theta / 2);
  const double s = std::sin(theta / 2);
  const Complex g = std::polar(1.0, phase);
  Eigen::Matrix2cd m;
  m(0, 0) = g * c;
  m(0, 1) = -g * std::polar(1.0, lambda) * s;
  m(1, 0) = g * std::polar(1.0, phi) * s;
  m(1, 1) = g * std::polar(1.0, phi + lambda) * c;
  return m;
}

Gate Gate::inverse() const {
  if (kind == GateKind::cx) return *this;
  return u(q0, -theta, -lambda, -phi, -phase);
}

bool Gate::is_identity(double tol) const {
  if (kind != GateKind::u) return false;
  return std::abs(std::sin(theta / 2)) < tol && std::abs(wrap_angle(phi + lambda)) < tol;
}

Gate euler_gate(const Eigen::Matrix2cd& m, int q) {
  const double c = std::abs(m(0, 0));
  const double s = std::abs(m(1, 0));
  const double theta = 2.0 * std::atan2(s, c);
  double phase = 0.0;
  double phi = 0.0;
  double lambda = 0.0;
  if (s < 1e-14) {
    phase = std::arg(m(0, 0));
    lambda = std::arg(m(1, 1)) - phase;
  } else if (c < 1e-14) {
    phase = std::arg(m(1, 0));
    lambda = std::arg(-m(0, 1)) - phase;
  } else {
    phase = std::arg(m(0, 0));
    phi = std::arg(m(1, 0)) - phase;
    lambda = std::arg(-m(0, 1)) - phase;
  }
  return Gate::u(q, theta, wrap_angle(phi), wrap_angle(lambda), phase);
}

Circuit::Circuit(int num_qubits) : num_qubits_(num_qubits) {
  if (num_qubits < 0) throw DataError("Circuit: negative qubit count");
}

void Circuit::add(const Gate& g) {
  auto valid = [&](int q) { return q >= 0 && q < num_qubits_; };
  if (!valid(g.q0) || (g.kind == GateKind::cx && (!valid(g.q1) || g.q1 == g.q0))) {
    throw DataError("Circuit::add: gate qubits out of range or not distinct");
  }
  if (g.kind == GateKind::u &&
      !(std::isfinite(g.theta) && std::isfinite(g.phi) && std::isfinite(g.lambda) && std::isfinite(g.phase))) {
    throw DataError("Circuit::add: non-finite gate angle");
  }
  gates_.push_back(g);
}

void Circuit::append(const Circuit& other, std::span<const int> qubit_map) {
  if (qubit_map.size() != static_cast<std::size_t>(other.num_qubits())) {
    throw DataError("Circuit::append: qubit map size mismatch");
  }
  gates_.reserve(gates_.size() + other.size());
  for (Gate g : other.gates()) {
    g.q0 = qubit_map[static_cast<std::size_t>(g.q0)];
    if (g.kind == GateKind::cx) g.q1 = qubit_map[static_cast<std::size_t>(g.q1)];
    add(g);
  }
}

void Circuit::append(const Circuit& other) {
  if (other.num_qubits() > num_qubits_) throw DataError("Circuit::append: circuit too wide");
  gates_.insert(gates_.end(), other.gates().begin(), other.gates().end());
}

int depth(const Circuit& c) {
  std::vector<int> level(static_cast<std::size_t>(c.num_qubits()), 0);
  int result = 0;
  for (const Gate& g : c.gates()) {
    int layer = level[static_cast<std::size_t>(g.q0)];
    if (g.kind == GateKind::cx) layer = std::max(layer, level[static_cast<std::size_t>(g.q1)]);
    ++layer;
    level[static_cast<std::size_t>(g.q0)] = layer;
    if (g.kind == GateKind::cx) level[static_cast<std::size_t>(g.q1)] = layer;
    result = std::max(result, layer);
  }
  return result;
}

Circuit compose(const Circuit& first, const Circuit& second) {
  Circuit out(std::max(first.num_qubits(), second.num_qubits()));
  out.append(first);
  out.append(second);
  return out;
}

Circuit inverse(const Circuit& c) {
  Circuit out(c.num_qubits());
  out.reserve(c.size());
  for (auto it = c.gates().rbegin(); it != c.gates().rend(); ++it) out.add(it->inverse());
  return out;
}

Circuit peephole(const Circuit& c) {
  std::vector<Gate> out;
  std::vector<bool> alive;
  out.reserve(c.size());
  alive.reserve(c.size());
  // Stack of live output indices touching each qubit.
  std::vector<std::vector<std::size_t>> last(static_cast<std::size_t>(c.num_qubits()));

  auto top = [&](int q) -> long {
    auto& st = last[static_cast<std::size_t>(q)];
    while (!st.empty() && !alive[st.back()]) st.pop_back();
    return st.empty() ? -1 : static_cast<long>(st.back());
  };

  for (const Gate& g : c.gates()) {
    if (g.kind == GateKind::u) {
      const long t = top(g.q0);
      if (t >= 0 && out[static_cast<std::size_t>(t)].kind == GateKind::u) {
        Gate merged = euler_gate(g.matrix() * out[static_cast<std::size_t>(t)].matrix(), g.q0);
        if (merged.is_identity()) {
          alive[static_cast<std::size_t>(t)] = false;
        } else {
          out[static_cast<std::size_t>(t)] = merged;
        }
        continue;
      }
      if (g.is_identity()) continue;
      out.push_back(g);
      alive.push_back(true);
      last[static_cast<std::size_t>(g.q0)].push_back(out.size() - 1);
    } else {
      const long tc = top(g.q0);
      const long tt = top(g.q1);
      if (tc >= 0 && tc == tt) {
        const Gate& prev = out[static_cast<std::size_t>(tc)];
        if (prev.kind == GateKind::cx && prev.q0 == g.q0 && prev.q1 == g.q1) {
          alive[static_cast<std::size_t>(tc)] = false;
          continue;
        }
      }
      out.push_back(g);
      alive.push_back(true);
      last[static_cast<std::size_t>(g.q0)].push_back(out.size() - 1);
      last[static_cast<std::size_t>(g.q1)].push_back(out.size() - 1);
    }
  }

  Circuit result(c.num_qubits());
  result.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (alive[i]) result.add(out[i]);
  return result;
}

Eigen::VectorXcd simulate(const Circuit& c, const Eigen::VectorXcd& input) {
  if (c.num_qubits() > kMaxSimulationQubits) {
    throw DataError("simulate: " + std::to_string(c.num_qubits()) + " qubits exceeds the simulator limit");
  }
  const Eigen::Index dim = Eigen::Index{1} << c.num_qubits();
  if (input.size() != dim) {
    throw DataError("simulate: statevector length " + std::to_string(input.size()) + " != 2^" +
                    std::to_string(c.num_qubits()));
  }
  Eigen::VectorXcd psi = input;
  for (const Gate& g : c.gates()) {
    if (g.kind == GateKind::u) {
      const Eigen::Matrix2cd m = g.matrix();
      const Eigen::Index bit = Eigen::Index{1} << g.q0;
      for (Eigen::Index i = 0; i < dim; ++i) {
        if (i & bit) continue;
        const Complex a0 = psi(i);
        const Complex a1 = psi(i | bit);
        psi(i) = m(0, 0) * a0 + m(0, 1) * a1;
        psi(i | bit) = m(1, 0) * a0 + m(1, 1) * a1;
      }
    } else {
      const Eigen::Index cbit = Eigen::Index{1} << g.q0;
      const Eigen::Index tbit = Eigen::Index{1} << g.q1;
      for (Eigen::Index i = 0; i < dim; ++i) {
        if ((i & cbit) && !(i & tbit)) std::swap(psi(i), psi(i | tbit));
      }
    }
  }
  return psi;
}

Eigen::MatrixXcd circuit_unitary(const Circuit& c) {
  const Eigen::Index dim = Eigen::Index{1} << c.num_qubits();
  Eigen::MatrixXcd u(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e(k) = 1.0;
    u.col(k) = simulate(c, e);
  }
  return u;
}

std::string dump(const Circuit& c) {
  std::ostringstream os;
  os.precision(17);
  for (const Gate& g : c.gates()) {
    if (g.kind == GateKind::u) {
      os << "GATE u " << g.q0 << ' ' << g.theta << ' ' << g.phi << ' ' << g.lambda << ' ' << g.phase << '\n';
    } else {
      os << "GATE cx " << g.q0 << ',' << g.q1 << '\n';
    }
  }
  return os.str();
}

nlohmann::json summary(const Circuit& c) {
  return {{"depth", depth(c)}, {"gates", c.size()}, {"qubits", c.num_qubits()}};
}

}  // namespace hhlc
