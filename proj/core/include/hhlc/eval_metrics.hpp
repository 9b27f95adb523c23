#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace hhlc {

// Positive class = well suited (label 1).
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels);

// Ratios with a zero denominator are reported as 0 and flagged.
struct ScoreReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  double balanced_accuracy = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool specificity_undefined = false;
  bool f1_undefined = false;
};

ScoreReport report(const ConfusionMatrix& cm);
nlohmann::json to_json(const ScoreReport& r);

// Harmonic mean of precision and recall.
double f1_score(double precision, double recall);
// Precision implied by an F1 score and a recall.
double precision_from_f1(double f1, double recall);

double balanced_accuracy(std::span<const int> preds, std::span<const int> labels);

struct ReportRow {
  std::string variant;
  std::string split;
  ScoreReport scores;
};

// dataset_variant,split_name,accuracy,f1,recall,specificity,balanced_accuracy
void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows);

// Fold id per sample, stratified by label. Throws DataError when a class has
// fewer samples than folds.
std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed);

using Classifier = std::function<std::vector<int>(const Eigen::MatrixXd&)>;
using ClassifierFactory =
    std::function<Classifier(const Eigen::MatrixXd& x, const std::vector<int>& y, std::uint64_t seed)>;

struct CurvePoint {
  double fraction = 0.0;
  double train_mean = 0.0, train_std = 0.0;
  double val_mean = 0.0, val_std = 0.0;
};

std::vector<double> default_curve_grid();

// k-fold cross-validated learning curve. For each fraction, every fold
// trains on a stratified subset of that size from its complement and is
// scored on the held-out fold.
std::vector<CurvePoint> learning_curve(const ClassifierFactory& factory, const Eigen::MatrixXd& x,
                                       const std::vector<int>& labels, int folds, const std::vector<double>& grid,
                                       std::uint64_t seed);

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve);

}  // namespace hhlc
