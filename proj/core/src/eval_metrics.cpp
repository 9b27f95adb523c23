#include "hhlc/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hhlc/error.hpp"
#include "hhlc/random.hpp"

namespace hhlc {

namespace {

double ratio(std::size_t num, std::size_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt(double x) { return nlohmann::json(x).dump(); }

void mean_std(const std::vector<double>& xs, double& mean, double& std) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  std = std::sqrt(var / static_cast<double>(xs.size()));
}

double accuracy_of(const std::vector<int>& preds, const std::vector<int>& labels) {
  return report(confusion(preds, labels)).accuracy;
}

}  // namespace

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw DataError("confusion: " + std::to_string(preds.size()) + " predictions for " +
                    std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int l = labels[i];
    if ((p != 0 && p != 1) || (l != 0 && l != 1)) throw DataError("confusion: values must be 0 or 1");
    if (p == 1 && l == 1) ++cm.tp;
    else if (p == 1) ++cm.fp;
    else if (l == 0) ++cm.tn;
    else ++cm.fn;
  }
  return cm;
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

double precision_from_f1(double f1, double recall) {
  const double den = 2.0 * recall - f1;
  if (den <= 0.0) throw DataError("precision_from_f1: no precision gives this F1 at this recall");
  return f1 * recall / den;
}

ScoreReport report(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DataError("report: empty confusion matrix");
  ScoreReport r;
  bool unused = false;
  r.accuracy = ratio(cm.tp + cm.tn, cm.total(), unused);
  r.precision = ratio(cm.tp, cm.tp + cm.fp, r.precision_undefined);
  r.recall = ratio(cm.tp, cm.tp + cm.fn, r.recall_undefined);
  r.specificity = ratio(cm.tn, cm.tn + cm.fp, r.specificity_undefined);
  r.f1_undefined = r.precision_undefined || r.recall_undefined || r.precision + r.recall == 0.0;
  r.f1 = r.f1_undefined ? 0.0 : f1_score(r.precision, r.recall);
  r.balanced_accuracy = 0.5 * (r.recall + r.specificity);
  return r;
}

nlohmann::json to_json(const ScoreReport& r) {
  nlohmann::json j = {{"accuracy", r.accuracy},       {"precision", r.precision},
                      {"recall", r.recall},           {"specificity", r.specificity},
                      {"f1", r.f1},                   {"balanced_accuracy", r.balanced_accuracy}};
  nlohmann::json undefined = nlohmann::json::array();
  if (r.precision_undefined) undefined.push_back("precision");
  if (r.recall_undefined) undefined.push_back("recall");
  if (r.specificity_undefined) undefined.push_back("specificity");
  if (r.f1_undefined) undefined.push_back("f1");
  j["undefined"] = undefined;
  return j;
}

double balanced_accuracy(std::span<const int> preds, std::span<const int> labels) {
  return report(confusion(preds, labels)).balanced_accuracy;
}

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "dataset_variant,split_name,accuracy,f1,recall,specificity,balanced_accuracy\n";
  for (const auto& row : rows) {
    const ScoreReport& s = row.scores;
    os << row.variant << ',' << row.split << ',' << fmt(s.accuracy) << ',' << fmt(s.f1) << ',' << fmt(s.recall) << ','
       << fmt(s.specificity) << ',' << fmt(s.balanced_accuracy) << '\n';
  }
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw DataError("need at least 2 folds");
  std::vector<int> fold(labels.size(), -1);
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    if (members.size() < static_cast<std::size_t>(folds)) {
      throw DataError("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                      " samples, fewer than " + std::to_string(folds) + " folds");
    }
    Rng rng(derive_seed(seed, cls));
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t k = 0; k < members.size(); ++k) fold[members[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  }
  return fold;
}

std::vector<double> default_curve_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 10; ++k) g.push_back(k / 10.0);
  return g;
}

std::vector<CurvePoint> learning_curve(const ClassifierFactory& factory, const Eigen::MatrixXd& x,
                                       const std::vector<int>& labels, int folds, const std::vector<double>& grid,
                                       std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw DataError("learning_curve: row/label count mismatch");
  for (double f : grid)
    if (!(f > 0.0 && f <= 1.0)) throw DataError("learning_curve: grid fractions must lie in (0, 1]");
  const std::vector<int> fold = stratified_folds(labels, folds, seed);

  auto rows_of = [&](const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
    return out;
  };
  auto labels_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    for (std::size_t i : idx) out.push_back(labels[i]);
    return out;
  };

  std::vector<CurvePoint> curve;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> train_acc, val_acc;
    for (int k = 0; k < folds; ++k) {
      std::vector<std::size_t> held, subset;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (fold[i] == k) held.push_back(i);
      for (int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
          if (fold[i] != k && labels[i] == cls) members.push_back(i);
        Rng rng(derive_seed(seed, k, cls, 7));
        rng.shuffle(std::span<std::size_t>(members));
        const auto take = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(grid[g] * static_cast<double>(members.size()))));
        subset.insert(subset.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(std::min(take, members.size())));
      }
      std::sort(subset.begin(), subset.end());
      const Eigen::MatrixXd xs = rows_of(subset);
      const std::vector<int> ys = labels_of(subset);
      const Classifier clf = factory(xs, ys, derive_seed(seed, g, k));
      train_acc.push_back(accuracy_of(clf(xs), ys));
      val_acc.push_back(accuracy_of(clf(rows_of(held)), labels_of(held)));
    }
    CurvePoint p;
    p.fraction = grid[g];
    mean_std(train_acc, p.train_mean, p.train_std);
    mean_std(val_acc, p.val_mean, p.val_std);
    curve.push_back(p);
  }
  return curve;
}

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve) {
  os << "fraction,train_mean,train_std,val_mean,val_std\n";
  for (const auto& p : curve) {
    os << fmt(p.fraction) << ',' << fmt(p.train_mean) << ',' << fmt(p.train_std) << ',' << fmt(p.val_mean) << ','
       << fmt(p.val_std) << '\n';
  }
}

}  // namespace hhlc
