// Acceptance run: one PASS/FAIL line per criterion. Criteria 8 and 9 reuse
// the corpus, cutoff and d4 model trained for criterion 7.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../gradcheck.hpp"
#include "../oracle.hpp"
#include "hhlc/dataset_forge.hpp"
#include "hhlc/eval_metrics.hpp"
#include "hhlc/features.hpp"
#include "hhlc/hhl_builder.hpp"
#include "hhlc/mlp_classifier.hpp"
#include "hhlc/pipeline.hpp"
#include "hhlc/pipeline_config.hpp"
#include "hhlc/random.hpp"
#include "hhlc/synthesis.hpp"

using namespace hhlc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

// State shared by criteria 7-9.
struct Shared {
  fs::path work;
  int jobs = 0;
  PipelineConfig cfg;
  std::optional<Corpus> corpus;
  double threshold = 0.0;  // 0.476 cutoff on the full corpus
  std::map<Variant, ScoreReport> base;
  std::optional<MlpModel> generic_d4;
};

SystemMatrix diag2(double a, double b) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return SystemMatrix(m);
}

// Fidelity of a simulated HHL solution against Eigen's LU solve with uniform b.
double lu_fidelity(const SystemMatrix& a, const Eigen::VectorXcd& solution) {
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(a.n());
  Eigen::VectorXd x = a.elements().fullPivLu().solve(b);
  x.normalize();
  return std::norm(x.cast<Complex>().dot(solution));
}

Outcome synthesis_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int q = 1 + k % 3;
    const Eigen::MatrixXcd u = oracle::random_unitary(1 << q, rng);
    worst = std::max(worst, oracle::phase_distance(circuit_unitary(synthesize(u)), u));
  }
  return {worst <= 1e-8, "worst Frobenius distance " + fmt(worst, 3) + " over 100 unitaries"};
}

Outcome hhl_correctness() {
  double ideal_min = 1.0;
  for (int n : {2, 4}) {
    const SystemMatrix a = ideal_matrix(n);
    ideal_min = std::min(ideal_min, lu_fidelity(a, simulate_hhl(build_hhl(a), a).solution));
  }
  double random_min = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SystemMatrix a = generate_random_sparse({2, 2, 1000.0, 9000 + seed});
    random_min = std::min(random_min, lu_fidelity(a, simulate_hhl(build_hhl(a), a).solution));
  }
  return {ideal_min >= 0.999 && random_min >= 0.80,
          "ideal min " + fmt(ideal_min, 6) + ", random 2x2 min " + fmt(random_min)};
}

Outcome depth_steps() {
  std::vector<int> d;
  for (double k : {1.9, 2.1, 3.9, 4.1, 7.9, 8.1}) d.push_back(full_depth(diag2(1.0, 1.0 / k)));
  const bool steps = d[0] < d[1] && d[2] < d[3] && d[4] < d[5];
  const bool plateaus = d[1] == d[2] && d[3] == d[4];
  std::string s = "depths";
  for (int v : d) s += " " + std::to_string(v);
  return {steps && plateaus, s};
}

Outcome exponential_growth() {
  std::vector<int> d;
  for (int n : {2, 4, 8, 16}) d.push_back(full_depth(ideal_matrix(n)));
  bool ok = true;
  std::string s = "depths";
  for (std::size_t i = 0; i < d.size(); ++i) {
    s += " " + std::to_string(d[i]);
    if (i > 0 && !(d[i] >= 2 * d[i - 1])) ok = false;
  }
  return {ok, s};
}

Outcome bound_soundness() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int bad_gersh = 0, bad_cassini = 0;
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 << (1 + k % 4);
    Eigen::MatrixXd a;
    if (k % 2 == 0) {
      a = generate_random_sparse({n, 1 + (k / 2) % n, 1000.0, 7000u + k}).elements();
    } else {
      a.resize(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = u(rng);
    }
    const CondEstimates c = condition_estimates(a);
    const Eigen::VectorXd mags = Eigen::EigenSolver<Eigen::MatrixXd>(a, false).eigenvalues().cwiseAbs();
    const double slack = 1e-12;
    if (mags.maxCoeff() > c.gersh_max * (1 + slack) || mags.minCoeff() < c.gersh_min * (1 - slack) - slack) ++bad_gersh;
    if (c.cassini_max > c.gersh_max * (1 + slack) || c.cassini_min < c.gersh_min * (1 - slack)) ++bad_cassini;
  }
  return {bad_gersh == 0 && bad_cassini == 0,
          std::to_string(bad_gersh) + " Gershgorin violations, " + std::to_string(bad_cassini) + " wider Cassini"};
}

Outcome gradient_check() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  double worst = 0.0;
  int checked = 0, skipped = 0;
  auto run = [&](int in, const std::vector<int>& hidden, int rows, int per_layer, std::uint64_t seed) {
    MlpModel m = MlpModel::init(in, seed, hidden);
    Eigen::MatrixXd x(rows, in);
    Eigen::VectorXd y(rows);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < in; ++j) x(i, j) = g(rng);
      y(i) = i % 2;
    }
    const gradcheck::Result r = gradcheck::run(m, x, y, per_layer, seed);
    worst = std::max(worst, r.worst_rel);
    checked += r.checked;
    skipped += r.skipped;
  };
  run(5, {7, 6, 4}, 9, 1 << 20, 1);
  run(static_cast<int>(feature_names(Variant::d1).size()), kDefaultHidden, 16, 40, 2);
  return {worst <= 1e-5 && checked >= 200, "worst relative error " + fmt(worst, 3) + " over " + std::to_string(checked) +
                                             " parameters (" + std::to_string(skipped) + " skipped at a ReLU kink)"};
}

// Trains one variant and scores it on its held-out test split.
ScoreReport train_and_test(const Shared& sh, Variant v, const DepthCutoff& cutoff, std::optional<int> size,
                           MlpModel* keep = nullptr) {
  const Featurized f = featurize(*sh.corpus, v, cutoff, size, sh.jobs);
  auto [fit, test] = split_table(f.table, sh.cfg.test_fraction, derive_seed(sh.cfg.seed, 0x7e57));
  TrainConfig tc = sh.cfg.train;
  tc.seed = sh.cfg.seed;
  MlpModel m = fit_model(fit, tc, sh.cfg.val_fraction, false);
  const ScoreReport r = evaluate(m, test);
  if (keep) *keep = std::move(m);
  return r;
}

void ensure_corpus(Shared& sh) {
  if (sh.corpus) return;
  Corpus c = build_corpus(sh.cfg.corpus(), sh.jobs);
  attach_depths(c, sh.jobs);
  std::vector<std::optional<int>> depths;
  for (const auto& e : c) depths.push_back(e.depth);
  std::vector<int> labels;
  sh.threshold = label_depths(depths, sh.cfg.cutoff, labels).threshold;
  std::ofstream os(sh.work / "corpus_depths.jsonl");
  write_corpus(os, c);
  sh.corpus = std::move(c);
}

Outcome score_ordering(Shared& sh) {
  ensure_corpus(sh);
  std::map<Variant, double> acc;
  for (Variant v : {Variant::d1, Variant::d2, Variant::d3}) {
    sh.base[v] = train_and_test(sh, v, sh.cfg.cutoff, {});
    acc[v] = sh.base[v].accuracy;
  }
  MlpModel d4;
  sh.base[Variant::d4] = train_and_test(sh, Variant::d4, sh.cfg.cutoff, 4, &d4);
  acc[Variant::d4] = sh.base[Variant::d4].accuracy;
  sh.generic_d4 = std::move(d4);

  const double a1 = acc[Variant::d1], a2 = acc[Variant::d2], a3 = acc[Variant::d3], a4 = acc[Variant::d4];
  const bool ok = a1 >= 0.95 && a1 > a2 && a2 >= a3 && a3 > a4 && a1 - a4 >= 0.1;
  return {ok, std::to_string(sh.corpus->size()) + " matrices, threshold " + fmt(sh.threshold, 6) + ", accuracy d1 " +
                  fmt(a1) + " d2 " + fmt(a2) + " d3 " + fmt(a3) + " d4 " + fmt(a4)};
}

Outcome cutoff_sensitivity(Shared& sh) {
  if (sh.base.size() < 4) score_ordering(sh);
  DepthCutoff strict;
  strict.mode = DepthCutoff::Mode::quantile;
  strict.value = 0.362;
  bool ok = true;
  std::string s;
  for (Variant v : {Variant::d2, Variant::d3, Variant::d4}) {
    const ScoreReport r = train_and_test(sh, v, strict, v == Variant::d4 ? std::optional<int>(4) : std::nullopt);
    const double before = sh.base[v].specificity;
    if (!(r.specificity > before)) ok = false;
    s += std::string(s.empty() ? "" : ", ") + std::string(to_string(v)) + " " + fmt(before) + " -> " + fmt(r.specificity);
  }
  return {ok, "specificity " + s};
}

Outcome iris_pipeline(Shared& sh) {
  if (!sh.generic_d4) score_ordering(sh);
  std::ifstream in(HHLC_IRIS_CSV);
  const Eigen::MatrixXd table = read_iris_csv(in);

  // The matching pool: random 4x4 matrices from the same generator.
  CorpusConfig pc;
  pc.sizes = {4};
  pc.allocation = Allocation::per_size;
  pc.size_totals = {{4, 400000}};
  pc.seed = derive_seed(sh.cfg.seed, 0x9001);
  Corpus pool = build_corpus(pc, sh.jobs);
  std::erase_if(pool, [](const CorpusEntry& e) { return e.s != 4; });

  IrisOptions opt;
  opt.count = 500;
  opt.seed = sh.cfg.seed;
  opt.threshold = sh.threshold;
  opt.variants = {Variant::d4};
  opt.train = sh.cfg.train;
  opt.train.seed = sh.cfg.seed;
  opt.jobs = sh.jobs;
  const IrisRun run = run_iris(table, pool, opt);

  int bad_rank = 0, bad_s = 0;
  for (const auto& e : run.iris) {
    if (Eigen::FullPivLU<Eigen::MatrixXd>(e.matrix.elements()).rank() != 4) ++bad_rank;
    if (sparsity(e.matrix) != 4) ++bad_s;
  }
  const double frac = run.iris_labels.positive_fraction;
  double gap = 0.0;
  for (int b = 0; b < kKappaBins; ++b)
    gap = std::max(gap, std::abs(run.selected_hist.proportions[b] - run.iris_hist.proportions[b]));
  const double total = static_cast<double>(run.selected.size());

  const double generic = evaluate_on_iris(*sh.generic_d4, run, sh.jobs).recall;
  std::optional<double> matched;
  for (const auto& row : run.rows)
    if (row.variant == "d4" && row.split == "test_iris") matched = row.scores.recall;

  const bool ok = run.iris.size() == 500 && bad_rank == 0 && bad_s == 0 && frac >= 0.6 && frac <= 0.95 &&
                  gap <= 1.0 / total + 1e-12 && matched && *matched > generic;
  std::string s = std::to_string(run.iris.size()) + " iris matrices (" + std::to_string(bad_rank) + " rank<4, " +
                  std::to_string(bad_s) + " s!=4), positive " + fmt(frac) + ", selected " +
                  std::to_string(run.selected.size()) + " with max bin gap " + fmt(gap, 3) + ", d4 iris recall generic " +
                  fmt(generic);
  s += matched ? ", matched " + fmt(*matched) : ", matched none (" + run.skipped + ")";
  return {ok, s};
}

Outcome metric_formulas() {
  struct Case {
    double p, r, f1;
  };
  double worst = 0.0;
  for (const Case& c : {Case{1.0, 1.0, 1.0}, Case{0.5, 0.5, 0.5}, Case{1.0, 0.5, 2.0 / 3.0}, Case{0.75, 0.6, 2.0 / 3.0},
                        Case{0.9, 0.1, 0.18}})
    worst = std::max(worst, std::abs(f1_score(c.p, c.r) - c.f1));
  ConfusionMatrix cm;
  cm.tp = 3;
  cm.fp = 1;
  cm.fn = 2;
  cm.tn = 4;
  worst = std::max(worst, std::abs(report(cm).f1 - 2.0 / 3.0));
  const double p = precision_from_f1(0.753, 0.691);
  const double dp = std::abs(p - 0.827);
  return {worst <= 1e-3 && dp <= 1e-3, "hand cases max error " + fmt(worst, 3) + ", inverted precision " + fmt(p)};
}

// Small end-to-end run writing every artifact under `dir`.
void pipeline_once(const fs::path& dir, int jobs) {
  fs::create_directories(dir);
  PipelineConfig cfg;
  cfg.sizes = {2, 4, 8};
  cfg.size_totals = {{2, 60}, {4, 120}, {8, 60}};
  cfg.train.max_epochs = 15;
  Corpus c = build_corpus(cfg.corpus(), jobs);
  {
    std::ofstream os(dir / "corpus.jsonl");
    write_corpus(os, c);
  }
  attach_depths(c, jobs);
  {
    std::ofstream os(dir / "depths.jsonl");
    write_corpus(os, c);
  }
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  std::vector<ReportRow> rows;
  for (Variant v : {Variant::d2, Variant::d4}) {
    const std::string name(to_string(v));
    const Featurized f = featurize(c, v, cfg.cutoff, v == Variant::d4 ? std::optional<int>(4) : std::nullopt, jobs);
    auto [fit, test] = split_table(f.table, cfg.test_fraction, derive_seed(cfg.seed, 0x7e57));
    {
      std::ofstream os(dir / (name + ".train.csv"));
      write_csv(os, fit);
    }
    const MlpModel m = fit_model(fit, tc, cfg.val_fraction, true);
    m.save((dir / (name + ".json")).string());
    rows.push_back({name, "test", evaluate(m, test)});
  }
  std::ofstream os(dir / "report.csv");
  write_report_csv(os, rows);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const Shared& sh) {
  const fs::path a = sh.work / "determinism_a", b = sh.work / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  pipeline_once(a, sh.jobs);
  pipeline_once(b, sh.jobs);
  int files = 0;
  std::vector<std::string> differ;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    const fs::path other = b / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) differ.push_back(e.path().filename().string());
  }
  std::string s = std::to_string(files) + " files compared";
  for (const auto& d : differ) s += ", differs: " + d;
  return {files >= 7 && differ.empty(), s};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string work = "acceptance_work";
  std::vector<int> only;
  int jobs = 0;
  app.add_option("--work-dir", work, "scratch directory");
  app.add_option("--only", only, "criteria to run (default: all)");
  app.add_option("--jobs", jobs, "worker threads (0 = one per CPU)");
  CLI11_PARSE(app, argc, argv);

  Shared sh;
  sh.work = work;
  sh.jobs = jobs;
  fs::create_directories(sh.work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"synthesis oracle", synthesis_oracle},
      {"HHL correctness", hhl_correctness},
      {"depth step law", depth_steps},
      {"exponential growth", exponential_growth},
      {"Gershgorin/Cassini soundness", bound_soundness},
      {"gradient check", gradient_check},
      {"score ordering", [&] { return score_ordering(sh); }},
      {"cutoff sensitivity", [&] { return cutoff_sensitivity(sh); }},
      {"Iris pipeline", [&] { return iris_pipeline(sh); }},
      {"metric formulas", metric_formulas},
      {"determinism", [&] { return determinism(sh); }},
  };
  const std::set<int> selected(only.begin(), only.end());

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << criteria[i].first << ": " << o.detail << " ("
              << fmt(secs, 3) << " s)" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
