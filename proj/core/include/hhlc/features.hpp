#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hhlc/matrix_core.hpp"

namespace hhlc {

// Dataset variants: which feature groups a model sees.
enum class Variant { d1, d2, d3, d4 };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

// Canonical ordered registry of every named matrix feature: structure,
// value, diagonal, condition estimates, then kappa. Raw elements (d4) are
// not part of it.
const std::vector<std::string>& feature_registry();

// Column names of a variant, in output order.
std::vector<std::string> feature_names(Variant v);

struct FeatureVector {
  Variant variant = Variant::d3;
  std::vector<std::string> names;
  std::vector<double> values;
};

// Gershgorin disks and Brauer (Cassini) ovals, as bounds on |lambda|.
struct CondEstimates {
  double gersh_max = 0.0;
  double gersh_min = 0.0;
  double gersh_ratio = 0.0;
  double gersh_overlap = 0.0;
  double cassini_max = 0.0;
  double cassini_min = 0.0;
  double cassini_ratio = 0.0;
};

inline constexpr double kBoundFloor = 1e-12;

std::vector<double> structure_features(const Eigen::MatrixXd& a);
std::vector<double> value_features(const Eigen::MatrixXd& a);
std::vector<double> diagonal_features(const Eigen::MatrixXd& a);
void gershgorin(const Eigen::MatrixXd& a, CondEstimates& out);
void cassini(const Eigen::MatrixXd& a, CondEstimates& out);
CondEstimates condition_estimates(const Eigen::MatrixXd& a);

// Two-norm by power iteration on A^T A (no eigendecomposition).
double power_two_norm(const Eigen::MatrixXd& a);

// Throws DataError for d4 on a matrix that is not 4x4.
FeatureVector extract(const SystemMatrix& a, Variant v);

// Labeled or unlabeled feature rows.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;                // empty when unlabeled
  std::vector<std::optional<int>> depths; // empty when unlabeled
  std::vector<std::string> ids;

  std::size_t size() const { return rows.size(); }
  bool labeled() const { return !labels.empty(); }
  Eigen::MatrixXd matrix() const;
  Eigen::VectorXd label_vector() const;
  FeatureTable subset(const std::vector<std::size_t>& index) const;
};

void write_csv(std::ostream& os, const FeatureTable& t);
FeatureTable read_csv(std::istream& is);

}  // namespace hhlc
