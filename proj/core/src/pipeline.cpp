#include "hhlc/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "hhlc/error.hpp"
#include "hhlc/hhl_builder.hpp"
#include "hhlc/parallel.hpp"
#include "hhlc/random.hpp"

namespace hhlc {

namespace {

FeatureTable extract_rows(const std::vector<const SystemMatrix*>& matrices, Variant v, int jobs) {
  FeatureTable t;
  t.names = feature_names(v);
  t.rows.resize(matrices.size());
  t.ids.resize(matrices.size());
  parallel_for(matrices.size(), jobs, [&](std::size_t i) {
    t.rows[i] = extract(*matrices[i], v).values;
    t.ids[i] = matrices[i]->id();
  });
  return t;
}

void check_d4(const std::vector<const SystemMatrix*>& matrices, Variant v) {
  if (v != Variant::d4) return;
  for (const auto* m : matrices) {
    if (m->n() != 4) {
      throw DataError("variant d4 needs 4x4 matrices, but " + m->id() + " is " + std::to_string(m->n()) + "x" +
                      std::to_string(m->n()) + " (restrict the corpus to size 4)");
    }
  }
}

}  // namespace

Featurized featurize(const Corpus& corpus, Variant v, const DepthCutoff& cutoff, std::optional<int> size, int jobs) {
  std::vector<const CorpusEntry*> kept;
  for (const auto& e : corpus)
    if (!size || e.matrix.n() == *size) kept.push_back(&e);
  if (kept.empty()) throw DataError("featurize: no matrices" + (size ? " of size " + std::to_string(*size) : std::string()));
  std::vector<const SystemMatrix*> matrices;
  std::vector<std::optional<int>> depths;
  for (const auto* e : kept) {
    if (!e->depth && !e->overflow) throw DataError("featurize: " + e->matrix.id() + " has no depth; run depth first");
    matrices.push_back(&e->matrix);
    depths.push_back(e->depth);
  }
  check_d4(matrices, v);

  Featurized out;
  std::vector<int> labels;
  out.labels = label_depths(depths, cutoff, labels);
  out.table = extract_rows(matrices, v, jobs);
  out.table.labels = std::move(labels);
  out.table.depths = std::move(depths);
  return out;
}

FeatureTable feature_table(const std::vector<SystemMatrix>& matrices, Variant v, int jobs) {
  std::vector<const SystemMatrix*> ptrs;
  for (const auto& m : matrices) ptrs.push_back(&m);
  check_d4(ptrs, v);
  return extract_rows(ptrs, v, jobs);
}

Variant infer_variant(const std::vector<std::string>& names) {
  for (Variant v : {Variant::d1, Variant::d2, Variant::d3, Variant::d4})
    if (feature_names(v) == names) return v;
  throw DataError("feature columns do not match any dataset variant");
}

std::pair<FeatureTable, FeatureTable> split_table(const FeatureTable& t, double test_fraction, std::uint64_t seed) {
  if (!t.labeled()) throw DataError("split: table has no labels");
  const Split s = stratified_split(t.labels, test_fraction, seed);
  return {t.subset(s.train), t.subset(s.test)};
}

MlpModel fit_model(const FeatureTable& t, const TrainConfig& cfg, double val_fraction, bool tune, TrainHistory* history) {
  if (!t.labeled()) throw DataError("train: table has no labels");
  const Variant v = infer_variant(t.names);
  auto [fit, val] = split_table(t, val_fraction, derive_seed(cfg.seed, 0x5a1));
  MlpModel model = MlpModel::init(static_cast<int>(t.names.size()), derive_seed(cfg.seed, 0x1417));
  const Eigen::MatrixXd xv = val.matrix();
  const Eigen::VectorXd yv = val.label_vector();
  TrainHistory h = train(model, fit.matrix(), fit.label_vector(), xv, yv, cfg);
  if (tune) tune_threshold(model, xv, yv);
  model.train_meta["variant"] = std::string(to_string(v));
  model.train_meta["threshold_tuned"] = tune;
  if (history) *history = std::move(h);
  return model;
}

ScoreReport evaluate(const MlpModel& model, const FeatureTable& t) {
  if (!t.labeled()) throw DataError("evaluate: table has no labels");
  if (t.size() == 0) throw DataError("evaluate: table is empty");
  return report(confusion(model.predict(t.matrix()), t.labels));
}

IrisRun run_iris(const Eigen::MatrixXd& iris_table, const Corpus& pool, const IrisOptions& opt) {
  if (opt.threshold && !(*opt.threshold > 0.0)) throw DataError("iris: the depth cutoff must be positive");
  if (!opt.threshold && opt.cutoff.mode == DepthCutoff::Mode::absolute) {
    if (!(opt.cutoff.value > 0.0)) throw DataError("iris: the depth cutoff must be positive");
  }
  const bool calibrate_here = !opt.threshold && opt.cutoff.mode == DepthCutoff::Mode::quantile;
  if (calibrate_here && !opt.match) {
    throw DataError("iris: a quantile cutoff is calibrated on the selected set; pass match or a fixed threshold");
  }
  IrisRun run;

  for (auto& m : iris_matrices(iris_table, opt.count, opt.seed)) {
    CorpusEntry e;
    e.matrix = std::move(m);
    run.iris.push_back(std::move(e));
  }
  attach_depths(run.iris, opt.jobs);

  std::vector<double> iris_kappas, pool_kappas;
  for (const auto& e : run.iris) iris_kappas.push_back(*e.kappa);
  run.iris_hist = kappa_histogram(iris_kappas);

  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& e = pool[i];
    if (e.matrix.n() == 4 && e.s == 4) {
      run.pool.push_back(i);
      pool_kappas.push_back(e.kappa ? *e.kappa : condition_number(e.matrix));
    }
  }
  if (run.pool.empty()) throw DataError("iris: the pool has no 4x4 matrices with s=4");
  run.pool_hist = kappa_histogram(pool_kappas);

  DepthCutoff fixed;
  fixed.mode = DepthCutoff::Mode::absolute;
  fixed.value = opt.threshold.value_or(opt.cutoff.value);
  if (!opt.match) {
    run.threshold = fixed.value;
    run.iris_labels = label_corpus(run.iris, fixed);
    return run;
  }

  const std::size_t total = opt.total.value_or(max_matched_total(pool_kappas, run.iris_hist));
  if (total == 0) throw DataError("iris: the pool cannot supply any matched sample");
  const std::vector<std::size_t> picked = distribution_match(pool_kappas, run.iris_hist, total, derive_seed(opt.seed, 0x3a7c));
  std::vector<double> selected_kappas;
  for (std::size_t p : picked) {
    run.selected.push_back(run.pool[p]);
    selected_kappas.push_back(pool_kappas[p]);
  }
  run.selected_hist = kappa_histogram(selected_kappas);

  // The selected set is labeled on the same footing as the iris target: the
  // depth of the 8x8 dilation under one absolute cutoff.
  for (std::size_t i : run.selected) {
    CorpusEntry e;
    e.matrix = pool[i].matrix;
    e.s = pool[i].s;
    run.selected_set.push_back(std::move(e));
  }
  parallel_for(run.selected_set.size(), opt.jobs, [&](std::size_t k) {
    CorpusEntry& e = run.selected_set[k];
    const DepthRecord r = measure_depth(dilate(e.matrix));
    e.kappa = r.kappa;
    e.n_l = r.n_l;
    e.depth = r.depth;
    e.overflow = !r.depth.has_value();
  });
  if (calibrate_here) {
    run.calibration = label_corpus(run.selected_set, opt.cutoff);
    fixed.value = run.calibration->threshold;
  }
  run.selected_labels = label_corpus(run.selected_set, fixed);
  run.threshold = fixed.value;
  run.iris_labels = label_corpus(run.iris, fixed);

  // No classifier can be fit on one class; the caller reports it.
  if (run.selected_labels.positives == 0 || run.selected_labels.positives == run.selected_labels.total) {
    std::ostringstream msg;
    msg << "selected set is single-class under threshold " << fixed.value;
    run.skipped = msg.str();
    return run;
  }

  for (Variant v : opt.variants) {
    Featurized f = featurize(run.selected_set, v, fixed, {}, opt.jobs);
    auto [fit, held] = split_table(f.table, opt.test_fraction, derive_seed(opt.seed, 0x5e1));
    TrainConfig cfg = opt.train;
    MlpModel model = fit_model(fit, cfg, opt.val_fraction, opt.tune_threshold);
    model.train_meta["training_set"] = "iris_like_selected";
    run.rows.push_back({std::string(to_string(v)), "validation", evaluate(model, held)});
    run.rows.push_back({std::string(to_string(v)), "test_iris", evaluate_on_iris(model, run, opt.jobs)});
    run.models.emplace(v, std::move(model));
  }
  return run;
}

Variant model_variant(const MlpModel& model) {
  if (model.train_meta.contains("variant")) return variant_from_string(model.train_meta["variant"].get<std::string>());
  for (Variant v : {Variant::d1, Variant::d2, Variant::d3, Variant::d4})
    if (feature_names(v).size() == static_cast<std::size_t>(model.input_dim())) return v;
  throw DataError("model input width " + std::to_string(model.input_dim()) + " matches no dataset variant");
}

ScoreReport evaluate_on_iris(const MlpModel& model, const IrisRun& run, int jobs) {
  std::vector<SystemMatrix> matrices;
  std::vector<int> labels;
  for (const auto& e : run.iris) {
    matrices.push_back(e.matrix);
    labels.push_back(*e.label);
  }
  FeatureTable t = feature_table(matrices, model_variant(model), jobs);
  t.labels = std::move(labels);
  return evaluate(model, t);
}

}  // namespace hhlc
