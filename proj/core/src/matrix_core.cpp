#include "hhlc/matrix_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hhlc/error.hpp"
#include "hhlc/random.hpp"

namespace hhlc {

namespace {

constexpr int kMaxJacobiSweeps = 80;
constexpr int kResampleBudget = 10000;
// Generated values smaller than this are redrawn so that normalization can
// never push a structural nonzero under kZeroThreshold.
constexpr double kMinGeneratedMagnitude = 1e-8;

void require_square(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw DataError(std::string(what) + ": matrix is not square (" + std::to_string(a.rows()) +
                    "x" + std::to_string(a.cols()) + ")");
  }
}

bool symmetric_within(const Eigen::MatrixXd& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol * scale) return false;
    }
  }
  return true;
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::random: return "random";
    case Provenance::ideal: return "ideal";
    case Provenance::iris: return "iris";
    case Provenance::dilated: return "dilated";
    case Provenance::gram: return "gram";
  }
  return "random";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "random") return Provenance::random;
  if (s == "ideal") return Provenance::ideal;
  if (s == "iris") return Provenance::iris;
  if (s == "dilated") return Provenance::dilated;
  if (s == "gram") return Provenance::gram;
  throw DataError("unknown matrix provenance '" + std::string(s) + "'");
}

SystemMatrix::SystemMatrix(Eigen::MatrixXd elements, Provenance provenance, std::string id)
    : elements_(std::move(elements)), provenance_(provenance), id_(std::move(id)) {
  require_square(elements_, "SystemMatrix");
  if (elements_.size() == 0) throw DataError("SystemMatrix: empty matrix");
  if (!elements_.allFinite()) throw DataError("SystemMatrix: non-finite entry");
}

bool SystemMatrix::is_symmetric(double tol) const { return symmetric_within(elements_, tol); }

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input) {
  require_square(input, "jacobi_eigen");
  const Eigen::Index n = input.rows();
  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  const double frob = a.norm();
  bool converged = (n <= 1) || frob == 0.0;
  for (int sweep = 0; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * frob) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) > 1e-12 * frob) throw NumericError("jacobi_eigen: no convergence");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = a.cols();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + m, n + m);
  d.topRightCorner(n, m) = a;
  d.bottomLeftCorner(m, n) = a.transpose();
  Eigen::VectorXd ev = jacobi_eigen(d).values.cwiseAbs();
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
  const Eigen::Index k = std::min(n, m);
  Eigen::VectorXd sv(k);
  for (Eigen::Index i = 0; i < k; ++i) sv(i) = ev(2 * i);
  return sv;
}

double spectral_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return singular_values(a)(0);
}

Spectrum spectrum(const SystemMatrix& a) {
  if (!a.is_symmetric()) throw DataError("spectrum: matrix is not symmetric; symmetrize or dilate first");
  const SymmetricEigen eig = jacobi_eigen(a.elements());
  const Eigen::Index n = eig.values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return std::abs(eig.values(x)) > std::abs(eig.values(y));
  });
  Spectrum out;
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues.push_back(eig.values(order[k]));
    out.eigenvectors.col(k) = eig.vectors.col(order[k]);
  }
  const double hi = std::abs(out.eigenvalues.front());
  const double lo = std::abs(out.eigenvalues.back());
  if (hi == 0.0 || lo < kSingularTolerance * hi) throw NumericError("spectrum: matrix is singular");
  out.kappa = hi / lo;
  return out;
}

double condition_number(const SystemMatrix& a) {
  if (a.is_symmetric()) return spectrum(a).kappa;
  const Eigen::VectorXd sv = singular_values(a.elements());
  const double hi = sv(0);
  const double lo = sv(sv.size() - 1);
  if (hi == 0.0 || lo < kSingularTolerance * hi) throw NumericError("condition_number: matrix is singular");
  return hi / lo;
}

double gershgorin_upper_bound(const Eigen::MatrixXd& a) {
  double bound = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    bound = std::max(bound, a.row(i).cwiseAbs().sum());
  }
  return bound;
}

SystemMatrix normalize(const SystemMatrix& a) {
  const double norm = spectral_norm(a.elements());
  if (norm == 0.0) throw DataError("normalize: zero matrix");
  return SystemMatrix(a.elements() / norm, a.provenance(), a.id());
}

SystemMatrix dilate(const SystemMatrix& a) {
  const int n = a.n();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  d.topRightCorner(n, n) = a.elements();
  d.bottomLeftCorner(n, n) = a.elements().transpose();
  return SystemMatrix(std::move(d), Provenance::dilated, a.id());
}

std::pair<SystemMatrix, Eigen::VectorXd> gram_transform(const SystemMatrix& a,
                                                        const Eigen::VectorXd& b) {
  if (b.size() != a.n()) {
    throw DataError("gram_transform: vector length " + std::to_string(b.size()) +
                    " does not match matrix size " + std::to_string(a.n()));
  }
  const Eigen::MatrixXd& m = a.elements();
  Eigen::MatrixXd g = m.transpose() * m;
  // Exact symmetry; the product is symmetric only up to rounding otherwise.
  g = 0.5 * (g + g.transpose()).eval();
  return {SystemMatrix(std::move(g), Provenance::gram, a.id()), m.transpose() * b};
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int log2_exact(int n) {
  if (!is_power_of_two(n)) throw DataError("size " + std::to_string(n) + " is not a power of two");
  int k = 0;
  while ((1 << k) < n) ++k;
  return k;
}

SystemMatrix ideal_matrix(int n) {
  if (!is_power_of_two(n)) throw DataError("ideal_matrix: size must be a power of two");
  Eigen::VectorXd diag(n);
  for (int i = 0; i < n; ++i) diag(i) = (i % 2 == 0) ? 1.0 : 0.5;
  return SystemMatrix(diag.asDiagonal().toDenseMatrix(), Provenance::ideal,
                      "ideal-" + std::to_string(n));
}

int sparsity(const Eigen::MatrixXd& a) {
  int s = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    int count = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) count += std::abs(a(i, j)) >= kZeroThreshold ? 1 : 0;
    s = std::max(s, count);
  }
  return s;
}

int sparsity(const SystemMatrix& a) { return sparsity(a.elements()); }

SystemMatrix generate_random_sparse(const GenSpec& spec) {
  if (!is_power_of_two(spec.n) || spec.n < 2 || spec.n > 16) {
    throw DataError("generate_random_sparse: n must be one of 2, 4, 8, 16");
  }
  if (spec.s < 1 || spec.s > spec.n) throw DataError("generate_random_sparse: need 1 <= s <= n");
  if (!(spec.kappa_max >= 1.0)) throw DataError("generate_random_sparse: kappa_max must be >= 1");

  const int n = spec.n;
  Rng rng(spec.seed);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) pairs.emplace_back(i, j);

  std::vector<int> row_count(static_cast<std::size_t>(n));
  for (int attempt = 0; attempt < kResampleBudget; ++attempt) {
    // Greedy maximal support: the fullest row always ends up with exactly s
    // entries and no row is empty.
    rng.shuffle(std::span(pairs));
    std::fill(row_count.begin(), row_count.end(), 0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : pairs) {
      const bool fits = (i == j) ? row_count[i] < spec.s : (row_count[i] < spec.s && row_count[j] < spec.s);
      if (!fits) continue;
      double value = 0.0;
      do {
        value = rng.uniform(-1.0, 1.0);
      } while (std::abs(value) < kMinGeneratedMagnitude);
      a(i, j) = value;
      a(j, i) = value;
      ++row_count[i];
      if (i != j) ++row_count[j];
    }

    SystemMatrix candidate(std::move(a), Provenance::random);
    double kappa = 0.0;
    try {
      kappa = spectrum(candidate).kappa;
    } catch (const NumericError&) {
      continue;
    }
    if (kappa > spec.kappa_max) continue;
    return normalize(candidate);
  }
  throw NumericError("generate_random_sparse: resample budget exhausted (n=" + std::to_string(n) +
                     ", s=" + std::to_string(spec.s) + ")");
}

nlohmann::json to_json(const SystemMatrix& a) {
  nlohmann::json j;
  j["id"] = a.id();
  j["n"] = a.n();
  std::vector<double> elems;
  elems.reserve(static_cast<std::size_t>(a.n()) * static_cast<std::size_t>(a.n()));
  for (int i = 0; i < a.n(); ++i)
    for (int k = 0; k < a.n(); ++k) elems.push_back(a(i, k));
  j["elements"] = std::move(elems);
  j["provenance"] = std::string(to_string(a.provenance()));
  return j;
}

SystemMatrix matrix_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    const auto elems = j.at("elements").get<std::vector<double>>();
    if (n <= 0 || elems.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
      throw DataError("matrix record: element count does not equal n*n");
    }
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) a(i, k) = elems[static_cast<std::size_t>(i * n + k)];
    const std::string prov = j.contains("provenance") ? j.at("provenance").get<std::string>() : "random";
    const std::string id = j.contains("id") ? j.at("id").get<std::string>() : std::string{};
    return SystemMatrix(std::move(a), provenance_from_string(prov), id);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("matrix record: ") + e.what());
  }
}

}  // namespace hhlc
