#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "hhlc/dataset_forge.hpp"
#include "hhlc/eval_metrics.hpp"
#include "hhlc/features.hpp"
#include "hhlc/mlp_classifier.hpp"

namespace hhlc {

// Labels the corpus (optionally restricted to one matrix size) with the
// cutoff and extracts the variant's features. The quantile cutoff is
// calibrated on the rows that are kept. Entries need depths attached.
struct Featurized {
  FeatureTable table;
  LabelSummary labels;
};
Featurized featurize(const Corpus& corpus, Variant v, const DepthCutoff& cutoff, std::optional<int> size = {},
                     int jobs = 0);

// Unlabeled feature rows for arbitrary matrices.
FeatureTable feature_table(const std::vector<SystemMatrix>& matrices, Variant v, int jobs = 0);

// Variant whose columns match `names`; throws DataError when none does.
Variant infer_variant(const std::vector<std::string>& names);

// From train_meta, else from the input width (the four widths differ).
Variant model_variant(const MlpModel& model);

// Stratified train/test partition of a labeled table.
std::pair<FeatureTable, FeatureTable> split_table(const FeatureTable& t, double test_fraction, std::uint64_t seed);

// Initializes and trains an MLP on a labeled table; `val_fraction` of the rows
// are held out (stratified) for early stopping and threshold tuning.
MlpModel fit_model(const FeatureTable& t, const TrainConfig& cfg, double val_fraction, bool tune_threshold,
                   TrainHistory* history = nullptr);

ScoreReport evaluate(const MlpModel& model, const FeatureTable& t);

struct IrisOptions {
  int count = 500;
  std::uint64_t seed = 7;
  bool match = true;
  std::optional<std::size_t> total;  // selected-set size; largest feasible when unset
  // label = depth < threshold. Without a fixed threshold a quantile cutoff is
  // calibrated on the dilation depths of the selected set (needs match).
  std::optional<double> threshold;
  DepthCutoff cutoff;
  std::vector<Variant> variants = {Variant::d1, Variant::d2, Variant::d3, Variant::d4};
  TrainConfig train;
  double test_fraction = 0.2;
  double val_fraction = 0.2;
  bool tune_threshold = true;
  int jobs = 0;
};

struct IrisRun {
  Corpus iris;                       // depths measured on the 8x8 dilation
  LabelSummary iris_labels;
  KappaHistogram iris_hist;
  KappaHistogram pool_hist;          // n=4, s=4 pool entries
  KappaHistogram selected_hist;
  std::vector<std::size_t> pool;     // indices of n=4, s=4 entries in the pool corpus
  std::vector<std::size_t> selected; // indices into the pool corpus
  Corpus selected_set;               // labeled like the iris set
  double threshold = 0.0;
  std::optional<LabelSummary> calibration;  // set when calibrated on the selected set
  LabelSummary selected_labels;
  std::string skipped;  // why no model was retrained, empty otherwise
  std::map<Variant, MlpModel> models;
  std::vector<ReportRow> rows;       // "validation" and "test_iris" per variant
};

// Samples Iris matrices, labels them, histograms their kappas against the
// pool's n=4, s=4 entries, and (with match) builds the selected matrix set
// and retrains one model per variant on it.
IrisRun run_iris(const Eigen::MatrixXd& iris_table, const Corpus& pool, const IrisOptions& opt);

// Scores an existing model on the labeled iris set of a run.
ScoreReport evaluate_on_iris(const MlpModel& model, const IrisRun& run, int jobs = 0);

}  // namespace hhlc
