#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace hhlc {

// |x| below this is treated as a structural zero everywhere (sparsity,
// features, generation).
inline constexpr double kZeroThreshold = 1e-12;

// min|lambda| < kSingularTolerance * max|lambda| means singular.
inline constexpr double kSingularTolerance = 1e-13;

enum class Provenance { random, ideal, iris, dilated, gram };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

// Dense real square matrix describing a linear system A x = b.
class SystemMatrix {
 public:
  SystemMatrix() = default;
  explicit SystemMatrix(Eigen::MatrixXd elements, Provenance provenance = Provenance::random,
                        std::string id = {});

  int n() const { return static_cast<int>(elements_.rows()); }
  const Eigen::MatrixXd& elements() const { return elements_; }
  double operator()(int i, int j) const { return elements_(i, j); }
  Provenance provenance() const { return provenance_; }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  bool is_symmetric(double tol = kZeroThreshold) const;

 private:
  Eigen::MatrixXd elements_;
  Provenance provenance_ = Provenance::random;
  std::string id_;
};

struct Spectrum {
  std::vector<double> eigenvalues;  // sorted by magnitude, descending
  Eigen::MatrixXd eigenvectors;     // column k pairs with eigenvalues[k]
  double kappa = 1.0;
};

struct GenSpec {
  int n = 4;
  int s = 4;
  double kappa_max = 1000.0;
  std::uint64_t seed = 0;
};

// Raw symmetric eigendecomposition by cyclic Jacobi rotations; eigenvalues
// in ascending order, eigenvectors as columns.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a);

// Singular values, descending. Computed from the symmetric dilation, whose
// eigenvalues are +/- sigma_i.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& a);

double spectral_norm(const Eigen::MatrixXd& a);

// Eigen-analysis of a symmetric matrix. Throws DataError for non-symmetric
// input and NumericError when the matrix is singular.
Spectrum spectrum(const SystemMatrix& a);

// kappa from eigenvalue magnitudes for symmetric input, from singular values
// otherwise. Throws NumericError when singular.
double condition_number(const SystemMatrix& a);

// Upper bound on the spectral radius from Gershgorin row disks.
double gershgorin_upper_bound(const Eigen::MatrixXd& a);

SystemMatrix normalize(const SystemMatrix& a);
SystemMatrix dilate(const SystemMatrix& a);
std::pair<SystemMatrix, Eigen::VectorXd> gram_transform(const SystemMatrix& a,
                                                        const Eigen::VectorXd& b);
SystemMatrix ideal_matrix(int n);

// Maximum count of nonzeros over rows.
int sparsity(const SystemMatrix& a);
int sparsity(const Eigen::MatrixXd& a);

// Random real symmetric matrix with exactly spec.s nonzeros in its fullest
// row, kappa <= spec.kappa_max, spectral norm 1. Deterministic per seed.
SystemMatrix generate_random_sparse(const GenSpec& spec);

bool is_power_of_two(int n);
int log2_exact(int n);

// Matrix interchange: {"id", "n", "elements", "provenance"}.
nlohmann::json to_json(const SystemMatrix& a);
SystemMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace hhlc
