// hhlc: corpus generation, HHL depth labeling, feature extraction and MLP
// training from the command line.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hhlc/dataset_forge.hpp"
#include "hhlc/error.hpp"
#include "hhlc/eval_metrics.hpp"
#include "hhlc/features.hpp"
#include "hhlc/mlp_classifier.hpp"
#include "hhlc/pipeline.hpp"
#include "hhlc/pipeline_config.hpp"
#include "hhlc/random.hpp"

using namespace hhlc;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

Corpus load_corpus(const std::string& path) {
  auto in = open_in(path);
  return read_corpus(in);
}

void save_corpus(const std::string& path, const Corpus& c) {
  auto out = open_out(path);
  write_corpus(out, c);
}

FeatureTable load_table(const std::string& path) {
  auto in = open_in(path);
  return read_csv(in);
}

void save_table(const std::string& path, const FeatureTable& t) {
  auto out = open_out(path);
  write_csv(out, t);
}

// Config file plus `--set key=value` and per-flag overrides, applied in that
// order so flags win.
struct ConfigFlags {
  std::optional<std::string> path;
  std::vector<std::string> sets;
  std::map<std::string, std::optional<std::string>> flags;

  void add(CLI::App* app) {
    app->add_option("--config", path, "key=value config file (default: $" + std::string(kConfigEnvVar) + ")");
    app->add_option("--set", sets, "override one config key, as key=value (repeatable)");
  }
  void flag(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
    app->add_option(name, flags[key], help);
  }
  PipelineConfig resolve() const {
    PipelineConfig cfg = resolve_config(path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw DataError("--set expects key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : flags)
      if (value) cfg.set(key, *value);
    return cfg;
  }
};

void add_train_flags(CLI::App* app, ConfigFlags& cf) {
  cf.flag(app, "--seed", "seed", "random seed");
  cf.flag(app, "--lr0", "lr0", "initial learning rate");
  cf.flag(app, "--momentum", "momentum", "SGD momentum");
  cf.flag(app, "--patience", "patience", "epochs without validation improvement before the rate is divided");
  cf.flag(app, "--max-epochs", "max_epochs", "epoch limit");
  cf.flag(app, "--batch-size", "batch_size", "mini-batch size");
  cf.flag(app, "--val-fraction", "val_fraction", "share of training rows held out for early stopping");
}

TrainConfig train_config(const PipelineConfig& cfg) {
  TrainConfig t = cfg.train;
  t.seed = cfg.seed;
  return t;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label linear systems as well or poorly suited for HHL and train classifiers on matrix features"};
  app.require_subcommand(1);
  int jobs = 0;

  // generate
  auto* gen = app.add_subcommand("generate", "build a random sparse symmetric corpus");
  ConfigFlags gen_cf;
  std::string gen_out;
  gen_cf.add(gen);
  gen_cf.flag(gen, "--seed", "seed", "random seed");
  gen_cf.flag(gen, "--sizes", "sizes", "matrix sizes, e.g. 2,4,8,16");
  gen_cf.flag(gen, "--allocation", "allocation", "per_config or per_size");
  gen_cf.flag(gen, "--count", "count", "matrices per (n, s) under per_config");
  gen_cf.flag(gen, "--size-totals", "size_totals", "matrices per size under per_size, e.g. 2:300,4:800");
  gen->add_option("--out", gen_out, "corpus JSONL")->required();
  gen->add_option("--jobs", jobs, "worker threads (0 = one per CPU)");

  // depth
  auto* dep = app.add_subcommand("depth", "attach kappa, clock size and full HHL depth to every matrix");
  std::string dep_in, dep_out;
  dep->add_option("--in", dep_in, "corpus JSONL")->required();
  dep->add_option("--out", dep_out, "corpus JSONL with depths")->required();
  dep->add_option("--jobs", jobs, "worker threads (0 = one per CPU)");

  // featurize
  auto* fea = app.add_subcommand("featurize", "label by depth cutoff and extract a dataset variant");
  ConfigFlags fea_cf;
  std::string fea_in, fea_out;
  std::optional<std::string> fea_test, fea_meta;
  std::optional<int> fea_size;
  fea_cf.add(fea);
  fea_cf.flag(fea, "--variant", "variant", "d1, d2, d3 or d4");
  fea_cf.flag(fea, "--cutoff", "cutoff", "quantile:F or absolute:DEPTH");
  fea_cf.flag(fea, "--seed", "seed", "seed for the train/test split");
  fea_cf.flag(fea, "--test-fraction", "test_fraction", "share of rows written to --test-out");
  fea->add_option("--in", fea_in, "corpus JSONL with depths")->required();
  fea->add_option("--out", fea_out, "feature CSV (training rows when --test-out is given)")->required();
  fea->add_option("--test-out", fea_test, "also split off a stratified test CSV");
  fea->add_option("--size", fea_size, "keep only n x n matrices before labeling");
  fea->add_option("--meta", fea_meta, "labeling summary JSON (default: <out>.meta.json)");
  fea->add_option("--jobs", jobs, "worker threads (0 = one per CPU)");

  // train
  auto* trn = app.add_subcommand("train", "train an MLP on a labeled feature CSV");
  ConfigFlags trn_cf;
  std::string trn_in, trn_model;
  bool trn_tune = false;
  trn_cf.add(trn);
  add_train_flags(trn, trn_cf);
  trn->add_option("--in", trn_in, "labeled feature CSV")->required();
  trn->add_option("--model", trn_model, "model JSON to write")->required();
  trn->add_flag("--tune-threshold", trn_tune, "pick the decision threshold maximizing validation balanced accuracy");

  // evaluate
  auto* evl = app.add_subcommand("evaluate", "score a model on a labeled feature CSV");
  std::string evl_model, evl_in, evl_out, evl_split = "test";
  bool evl_append = false;
  evl->add_option("--model", evl_model, "model JSON")->required();
  evl->add_option("--in", evl_in, "labeled feature CSV")->required();
  evl->add_option("--out", evl_out, "report CSV")->required();
  evl->add_option("--split", evl_split, "split name written to the report")->capture_default_str();
  evl->add_flag("--append", evl_append, "append a row instead of rewriting the report");

  // iris
  auto* irs = app.add_subcommand("iris", "Iris case study: sample, label, match kappa distribution, retrain");
  ConfigFlags irs_cf;
  std::string irs_iris, irs_pool, irs_out_dir = ".";
  std::optional<std::string> irs_calibrate;
  std::optional<std::size_t> irs_total;
  std::vector<std::string> irs_generic, irs_variants;
  bool irs_match = false;
  irs_cf.add(irs);
  add_train_flags(irs, irs_cf);
  irs_cf.flag(irs, "--count", "iris_count", "Iris matrices to sample");
  irs_cf.flag(irs, "--cutoff", "cutoff", "quantile:F (calibrated on --calibrate) or absolute:DEPTH");
  irs->add_option("--iris", irs_iris, "Iris CSV")->required();
  irs->add_option("--pool", irs_pool, "random corpus JSONL supplying n=4, s=4 matrices")->required();
  irs->add_option("--calibrate", irs_calibrate, "corpus JSONL with depths for a quantile cutoff (default: the selected set's dilation depths)");
  irs->add_flag("--match", irs_match, "build the kappa-matched selected set and retrain on it");
  irs->add_option("--total", irs_total, "selected set size (default: largest the pool supports)");
  irs->add_option("--variants", irs_variants, "variants to retrain (default: d1 d2 d3 d4)");
  irs->add_option("--generic", irs_generic, "also score existing models on the Iris set (repeatable)");
  irs->add_option("--out-dir", irs_out_dir, "directory for reports, histograms and models")->capture_default_str();
  irs->add_option("--jobs", jobs, "worker threads (0 = one per CPU)");

  // curve
  auto* crv = app.add_subcommand("curve", "five-fold cross-validated learning curve");
  ConfigFlags crv_cf;
  std::string crv_in, crv_out;
  std::vector<double> crv_grid;
  crv_cf.add(crv);
  add_train_flags(crv, crv_cf);
  crv_cf.flag(crv, "--folds", "folds", "cross-validation folds");
  crv->add_option("--in", crv_in, "labeled feature CSV")->required();
  crv->add_option("--out", crv_out, "curve CSV")->required();
  crv->add_option("--grid", crv_grid, "training-size fractions (default: 0.1 to 1.0 by 0.1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) {
      const PipelineConfig cfg = gen_cf.resolve();
      save_corpus(gen_out, build_corpus(cfg.corpus(), jobs));
    } else if (*dep) {
      Corpus c = load_corpus(dep_in);
      attach_depths(c, jobs);
      save_corpus(dep_out, c);
    } else if (*fea) {
      const PipelineConfig cfg = fea_cf.resolve();
      const Featurized f = featurize(load_corpus(fea_in), cfg.variant, cfg.cutoff, fea_size, jobs);
      nlohmann::json meta = {{"variant", std::string(to_string(cfg.variant))},
                             {"feature_count", f.table.names.size()},
                             {"cutoff", cfg.cutoff.to_string()},
                             {"labels", to_json(f.labels)},
                             {"rows", f.table.size()}};
      if (fea_size) meta["size"] = *fea_size;
      if (fea_test) {
        auto [tr, te] = split_table(f.table, cfg.test_fraction, derive_seed(cfg.seed, 0x7e57));
        save_table(fea_out, tr);
        save_table(*fea_test, te);
        meta["train_rows"] = tr.size();
        meta["test_rows"] = te.size();
      } else {
        save_table(fea_out, f.table);
      }
      write_json(fea_meta.value_or(fea_out + ".meta.json"), meta);
    } else if (*trn) {
      const PipelineConfig cfg = trn_cf.resolve();
      MlpModel m = fit_model(load_table(trn_in), train_config(cfg), cfg.val_fraction, trn_tune);
      m.save(trn_model);
    } else if (*evl) {
      const MlpModel m = MlpModel::load(evl_model);
      const FeatureTable t = load_table(evl_in);
      if (t.names.size() != static_cast<std::size_t>(m.input_dim())) {
        throw DataError("model expects " + std::to_string(m.input_dim()) + " features, " + evl_in + " has " +
                        std::to_string(t.names.size()));
      }
      const ReportRow row{std::string(to_string(model_variant(m))), evl_split, evaluate(m, t)};
      std::ostringstream body;
      write_report_csv(body, {row});
      const bool header = !evl_append || !std::filesystem::exists(evl_out) || std::filesystem::file_size(evl_out) == 0;
      std::ofstream out(evl_out, evl_append ? std::ios::app : std::ios::trunc);
      if (!out) throw DataError("cannot write " + evl_out);
      const std::string text = body.str();
      out << (header ? text : text.substr(text.find('\n') + 1));
    } else if (*irs) {
      const PipelineConfig cfg = irs_cf.resolve();
      auto iris_in = open_in(irs_iris);
      const Eigen::MatrixXd table = read_iris_csv(iris_in);
      const Corpus pool = load_corpus(irs_pool);

      IrisOptions opt;
      opt.count = cfg.iris_count;
      opt.seed = cfg.seed;
      opt.match = irs_match;
      opt.train = train_config(cfg);
      opt.test_fraction = cfg.test_fraction;
      opt.val_fraction = cfg.val_fraction;
      opt.jobs = jobs;
      opt.total = irs_total;
      if (!irs_variants.empty()) {
        opt.variants.clear();
        for (const auto& v : irs_variants) opt.variants.push_back(variant_from_string(v));
      }
      opt.cutoff = cfg.cutoff;
      if (cfg.cutoff.mode == DepthCutoff::Mode::absolute) {
        opt.threshold = cfg.cutoff.value;
      } else if (irs_calibrate) {
        Corpus cal = load_corpus(*irs_calibrate);
        opt.threshold = label_corpus(cal, cfg.cutoff).threshold;
      }

      IrisRun run = run_iris(table, pool, opt);
      const std::filesystem::path dir(irs_out_dir);
      std::filesystem::create_directories(dir);
      {
        auto out = open_out((dir / "iris_kappa_hist.csv").string());
        write_histogram_csv(out, run.iris_hist, "iris", true);
        write_histogram_csv(out, run.pool_hist, "random_s4", false);
        if (irs_match) write_histogram_csv(out, run.selected_hist, "selected", false);
      }
      save_corpus((dir / "iris_matrices.jsonl").string(), run.iris);
      std::vector<ReportRow> rows = run.rows;
      for (const auto& path : irs_generic) {
        const MlpModel m = MlpModel::load(path);
        rows.push_back({std::string(to_string(model_variant(m))), "test_iris_generic", evaluate_on_iris(m, run, jobs)});
      }
      if (!rows.empty()) {
        auto out = open_out((dir / "iris_report.csv").string());
        write_report_csv(out, rows);
      }
      for (const auto& [v, m] : run.models) m.save((dir / ("iris_like_" + std::string(to_string(v)) + ".json")).string());
      nlohmann::json summary = {{"threshold", run.threshold},
                                {"iris", to_json(run.iris_labels)},
                                {"iris_count", run.iris.size()},
                                {"kappa_clipped", run.iris_hist.clipped},
                                {"pool_size", run.pool.size()},
                                {"selected", run.selected.size()},
                                {"tv_iris_vs_pool", tv_distance(run.iris_hist, run.pool_hist)}};
      if (irs_match) summary["tv_iris_vs_selected"] = tv_distance(run.iris_hist, run.selected_hist);
      if (irs_match) summary["selected_labels"] = to_json(run.selected_labels);
      if (!run.skipped.empty()) {
        summary["retrain_skipped"] = run.skipped;
        std::cerr << "hhlc: iris: no retraining, " << run.skipped << '\n';
      }
      write_json((dir / "iris_summary.json").string(), summary);
      std::cout << summary.dump(2) << '\n';
    } else if (*crv) {
      const PipelineConfig cfg = crv_cf.resolve();
      const FeatureTable t = load_table(crv_in);
      if (!t.labeled()) throw DataError(crv_in + " has no labels");
      const Variant v = infer_variant(t.names);
      const TrainConfig tc = train_config(cfg);
      const double val_fraction = cfg.val_fraction;
      ClassifierFactory factory = [&](const Eigen::MatrixXd& x, const std::vector<int>& y, std::uint64_t seed) {
        FeatureTable sub;
        sub.names = feature_names(v);
        sub.labels = y;
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          std::vector<double> row(static_cast<std::size_t>(x.cols()));
          for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(r, c);
          sub.rows.push_back(std::move(row));
          sub.ids.push_back(std::to_string(r));
        }
        TrainConfig local = tc;
        local.seed = seed;
        auto model = std::make_shared<MlpModel>(fit_model(sub, local, val_fraction, false));
        return Classifier([model](const Eigen::MatrixXd& q) { return model->predict(q); });
      };
      const std::vector<double> grid = crv_grid.empty() ? default_curve_grid() : crv_grid;
      const auto curve = learning_curve(factory, t.matrix(), t.labels, cfg.folds, grid, cfg.seed);
      auto out = open_out(crv_out);
      write_curve_csv(out, curve);
    }
  } catch (const NumericError& e) {
    std::cerr << "hhlc: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "hhlc: " << e.what() << '\n';
    return kData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "hhlc: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "hhlc: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
