#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's own numerics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Eigenvalues of a symmetric matrix from Eigen's QR-based solver, ascending.
inline Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
}

inline double kappa(const Eigen::MatrixXd& a) {
  const Eigen::VectorXd s = singular_values(a);
  return s(0) / s(s.size() - 1);
}

// Haar-ish random unitary via QR of a complex Gaussian matrix.
inline Eigen::MatrixXcd random_unitary(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd z(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) z(i, j) = {g(rng), g(rng)};
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) q.col(i) *= std::polar(1.0, std::arg(r(i, i)));
  return q;
}

inline Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) a(i, j) = a(j, i) = u(rng);
  return a;
}

// min over a global phase g of ||a - e^{ig} b||_F; the optimal g is the
// argument of tr(b^H a).
inline double phase_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const std::complex<double> overlap = (b.adjoint() * a).trace();
  const double g = std::arg(overlap);
  return (a - std::polar(1.0, g) * b).norm();
}

// Central finite differences of f at x, step h.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                        double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + h;
    const double up = f(x);
    x(i) = keep - h;
    const double down = f(x);
    x(i) = keep;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

// Greedy ASAP layering over (qubit lists), straight from the definition.
inline int layered_depth(const std::vector<std::vector<int>>& ops, int qubits) {
  std::vector<int> level(static_cast<std::size_t>(qubits), 0);
  int depth = 0;
  for (const auto& op : ops) {
    int l = 0;
    for (int q : op) l = std::max(l, level[static_cast<std::size_t>(q)]);
    for (int q : op) level[static_cast<std::size_t>(q)] = l + 1;
    depth = std::max(depth, l + 1);
  }
  return depth;
}

// Counts from scratch.
struct Counts {
  int tp = 0, fp = 0, tn = 0, fn = 0;
};
inline Counts count(const std::vector<int>& p, const std::vector<int>& y) {
  Counts c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] && y[i]) ++c.tp;
    if (p[i] && !y[i]) ++c.fp;
    if (!p[i] && !y[i]) ++c.tn;
    if (!p[i] && y[i]) ++c.fn;
  }
  return c;
}

inline double balanced_accuracy(const std::vector<double>& scores, const std::vector<int>& y, double t) {
  int pos = 0, neg = 0, tp = 0, tn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const int p = scores[i] > t ? 1 : 0;
    if (y[i]) {
      ++pos;
      tp += p;
    } else {
      ++neg;
      tn += 1 - p;
    }
  }
  return 0.5 * (static_cast<double>(tp) / pos + static_cast<double>(tn) / neg);
}

// Spearman rank correlation without tie correction beyond average ranks.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
