#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "../gradcheck.hpp"
#include "../oracle.hpp"
#include "hhlc/error.hpp"
#include "hhlc/mlp_classifier.hpp"

using namespace hhlc;

namespace {

Eigen::MatrixXd gaussian(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd x(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) x(i, j) = g(rng);
  return x;
}

// Two separated 2-D blobs.
void blobs(int per_class, std::mt19937_64& rng, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
  x = gaussian(2 * per_class, 2, rng, 0.5);
  y.resize(2 * per_class);
  for (int i = 0; i < 2 * per_class; ++i) {
    const bool pos = i < per_class;
    x(i, 0) += pos ? 3.0 : -3.0;
    x(i, 1) += pos ? 1.0 : -1.0;
    y(i) = pos ? 1.0 : 0.0;
  }
}

std::vector<int> to_ints(const Eigen::VectorXd& y) {
  std::vector<int> v;
  for (Eigen::Index i = 0; i < y.size(); ++i) v.push_back(static_cast<int>(y(i)));
  return v;
}

std::vector<double> to_vec(const Eigen::VectorXd& s) { return {s.data(), s.data() + s.size()}; }

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hhlc_test_" + name);
}

}  // namespace

TEST_SUITE("mlp_classifier") {

TEST_CASE("architecture and init") {
  const MlpModel m = MlpModel::init(16, 3);
  CHECK(m.layer_dims() == std::vector<int>{16, 512, 256, 256, 256, 256, 1});
  REQUIRE(m.layers().size() == 6);
  CHECK(m.layers()[0].w.rows() == 16);
  CHECK(m.layers()[0].w.cols() == 512);
  CHECK(m.layers()[5].w.rows() == 256);
  CHECK(m.layers()[5].w.cols() == 1);
  const MlpModel again = MlpModel::init(16, 3);
  for (std::size_t l = 0; l < 6; ++l) CHECK(m.layers()[l].w == again.layers()[l].w);
  CHECK(MlpModel::init(16, 4).layers()[0].w != m.layers()[0].w);
  CHECK(m.threshold() == 0.5);
  // He bound for the first layer.
  CHECK(m.layers()[0].w.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 16.0));
  CHECK_THROWS_AS(MlpModel::init(0, 1), DataError);
}

TEST_CASE("forward basics") {
  MlpModel m = MlpModel::init(5, 1, {8, 4});
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = gaussian(20, 5, rng, 3.0);
  m.fit_scaler(x);
  const Eigen::VectorXd s = m.scores(x);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    CHECK(s(i) > 0.0);
    CHECK(s(i) < 1.0);
    CHECK(std::abs(m.score(x.row(i).transpose()) - s(i)) <= 1e-12);
  }
  for (auto& l : m.layers()) {
    l.w.setZero();
    l.b.setZero();
  }
  CHECK(m.scores(x).cwiseEqual(0.5).all());
  CHECK_THROWS_AS(m.scores(Eigen::MatrixXd::Zero(2, 4)), DataError);
}

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 rng(3);
  SUBCASE("small network, every parameter") {
    MlpModel m = MlpModel::init(4, 5, {6, 5, 3});
    const Eigen::MatrixXd xs = gaussian(3, 4, rng);
    const Eigen::VectorXd y = Eigen::Vector3d(1, 0, 1);
    const auto r = gradcheck::run(m, xs, y, 1000, 1);
    CHECK(r.checked == 4 * 6 + 6 + 6 * 5 + 5 + 5 * 3 + 3 + 3 + 1);
    CHECK(r.worst_rel <= 1e-5);
  }
  SUBCASE("full-size network, sampled parameters") {
    MlpModel m = MlpModel::init(12, 6);
    const Eigen::MatrixXd xs = gaussian(3, 12, rng);
    const Eigen::VectorXd y = Eigen::Vector3d(0, 1, 1);
    const auto r = gradcheck::run(m, xs, y, 40, 2);
    CHECK(r.worst_rel <= 1e-5);
  }
}

TEST_CASE("loss matches a hand computation") {
  MlpModel m = MlpModel::init(2, 1, {3});
  const Eigen::MatrixXd xs = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::VectorXd y = Eigen::Vector2d(1, 0);
  const Eigen::VectorXd z = m.logits(xs);
  double want = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-z(i)));
    want -= y(i) * std::log(p) + (1 - y(i)) * std::log(1 - p);
  }
  CHECK(m.loss(xs, y) == doctest::Approx(want / 2).epsilon(1e-12));
}

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  LrSchedule s(cfg);
  CHECK(s.step(1.0));
  for (int e = 0; e < 45; ++e) CHECK_FALSE(s.step(1.0));
  CHECK(s.lr() == doctest::Approx(0.01 / 125));
  CHECK_FALSE(s.exhausted());
  for (int e = 0; e < 15 * 6; ++e) s.step(1.0);
  CHECK(s.exhausted());
  LrSchedule t(cfg);
  t.step(1.0);
  CHECK_FALSE(t.step(1.0 - 5e-5));  // below the tolerance
  CHECK(t.step(0.9));
  CHECK(t.best() == 0.9);
}

TEST_CASE("config validation") {
  TrainConfig c;
  c.lr0 = 0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = {};
  c.momentum = 1.0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = {};
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("separable blobs train to high accuracy") {
  std::mt19937_64 rng(4);
  Eigen::MatrixXd x, xv;
  Eigen::VectorXd y, yv;
  blobs(100, rng, x, y);
  blobs(30, rng, xv, yv);
  MlpModel m = MlpModel::init(2, 9, {16, 16});
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.seed = 1;
  const TrainHistory h = train(m, x, y, xv, yv, cfg);
  CHECK(h.epochs.size() <= 200);
  const auto pred = m.predict(x);
  int right = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) right += pred[i] == static_cast<int>(y(static_cast<Eigen::Index>(i)));
  CHECK(right >= 198);
  CHECK(m.train_meta["best_epoch"] == h.best_epoch);
}

TEST_CASE("full-batch loss is non-increasing at a small rate") {
  std::mt19937_64 rng(5);
  Eigen::MatrixXd x, xv;
  Eigen::VectorXd y, yv;
  blobs(20, rng, x, y);
  blobs(5, rng, xv, yv);
  MlpModel m = MlpModel::init(2, 2, {8, 8});
  TrainConfig cfg;
  cfg.lr0 = 1e-4;
  cfg.batch_size = 40;
  cfg.max_epochs = 50;
  cfg.patience = 1000;
  const TrainHistory h = train(m, x, y, xv, yv, cfg);
  REQUIRE(h.epochs.size() == 50);
  for (std::size_t e = 1; e < h.epochs.size(); ++e) CHECK(h.epochs[e].train_loss <= h.epochs[e - 1].train_loss + 1e-15);
}

TEST_CASE("training is deterministic") {
  std::mt19937_64 rng(6);
  Eigen::MatrixXd x, xv;
  Eigen::VectorXd y, yv;
  blobs(40, rng, x, y);
  blobs(10, rng, xv, yv);
  TrainConfig cfg;
  cfg.max_epochs = 20;
  cfg.seed = 3;
  MlpModel a = MlpModel::init(2, 1, {8}), b = MlpModel::init(2, 1, {8});
  train(a, x, y, xv, yv, cfg);
  train(b, x, y, xv, yv, cfg);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("training input checks") {
  MlpModel m = MlpModel::init(2, 1, {4});
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 2);
  CHECK_THROWS_AS(train(m, x, Eigen::VectorXd::Ones(4), x, Eigen::VectorXd::Ones(4), {}), DataError);
  CHECK_THROWS_AS(train(m, x, Eigen::Vector4d(1, 0, 1, 0), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), {}), DataError);
}

TEST_CASE("diverging training reports a numeric error") {
  std::mt19937_64 rng(7);
  Eigen::MatrixXd x, xv;
  Eigen::VectorXd y, yv;
  blobs(20, rng, x, y);
  blobs(5, rng, xv, yv);
  MlpModel m = MlpModel::init(2, 1, {32, 32});
  TrainConfig cfg;
  cfg.lr0 = 1e200;
  cfg.max_epochs = 50;
  CHECK_THROWS_AS(train(m, x, y, xv, yv, cfg), NumericError);
}

TEST_CASE("threshold sweep examples") {
  CHECK(best_threshold(Eigen::Vector4d(0.9, 0.8, 0.1, 0.2), {1, 1, 0, 0}) == doctest::Approx(0.5));
  CHECK(best_threshold(Eigen::Vector4d(0.3, 0.3, 0.3, 0.3), {1, 0, 1, 0}) == doctest::Approx(0.3));
  CHECK(best_threshold(Eigen::Vector4d(0.7, 0.7, 0.7, 0.7), {1, 0, 1, 0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(best_threshold(Eigen::Vector2d(0.1, 0.2), {1, 1}), DataError);

  // 9:1 validation where 0.5 labels everything positive.
  Eigen::VectorXd s(10);
  std::vector<int> y;
  for (int i = 0; i < 9; ++i) {
    s(i) = 0.9 + 0.01 * i;
    y.push_back(1);
  }
  s(9) = 0.7;
  y.push_back(0);
  const double t = best_threshold(s, y);
  CHECK(t > 0.7);
  CHECK(t < 0.9);
}

TEST_CASE("threshold sweep against brute force") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 5 + trial % 40;
    Eigen::VectorXd s(n);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = i % 3 == 0 ? 1 : 0;
      s(i) = std::round(u(rng) * 20) / 20 * 0.5 + 0.3 * y[static_cast<std::size_t>(i)];
    }
    const double t = best_threshold(s, y);
    const std::vector<double> sv = to_vec(s);
    std::vector<double> sorted = sv;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    double best = oracle::balanced_accuracy(sv, y, 0.5);
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
      best = std::max(best, oracle::balanced_accuracy(sv, y, 0.5 * (sorted[i] + sorted[i + 1])));
    CHECK(oracle::balanced_accuracy(sv, y, t) == doctest::Approx(best));
    CHECK(oracle::balanced_accuracy(sv, y, t) >= oracle::balanced_accuracy(sv, y, 0.5));
  }
}

TEST_CASE("predict uses a strict threshold") {
  MlpModel m = MlpModel::init(1, 1, {2});
  for (auto& l : m.layers()) {
    l.w.setZero();
    l.b.setZero();
  }
  m.fit_scaler(Eigen::MatrixXd::Zero(3, 1));
  CHECK(m.predict(Eigen::VectorXd(Eigen::VectorXd::Zero(1))) == 0);  // score exactly 0.5
  m.layers().back().b(0) = std::log(0.51 / 0.49);
  CHECK(m.predict(Eigen::VectorXd(Eigen::VectorXd::Zero(1))) == 1);
  m.set_threshold(0.52);
  CHECK(m.predict(Eigen::VectorXd(Eigen::VectorXd::Zero(1))) == 0);
  CHECK_THROWS_AS(m.set_threshold(1.0), DataError);
}

TEST_CASE("standardization round trip") {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd x = gaussian(30, 6, rng, 4.0);
  MlpModel m = MlpModel::init(6, 2, {8});
  m.fit_scaler(x);
  const Eigen::MatrixXd xs = m.standardize(x);
  for (Eigen::Index c = 0; c < 6; ++c) {
    CHECK(std::abs(xs.col(c).mean()) < 1e-12);
    CHECK(std::sqrt(xs.col(c).squaredNorm() / 30.0) == doctest::Approx(1.0));
  }
  const Eigen::VectorXd once = m.scores(x);
  Eigen::VectorXd twice = m.logits(xs);
  for (Eigen::Index i = 0; i < twice.size(); ++i) twice(i) = 1.0 / (1.0 + std::exp(-twice(i)));
  CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::MatrixXd constant = x;
  constant.col(2).setConstant(1.5);
  m.fit_scaler(constant);
  CHECK(m.scaler_std()(2) == 1.0);
}

TEST_CASE("save and load") {
  std::mt19937_64 rng(10);
  Eigen::MatrixXd x, xv;
  Eigen::VectorXd y, yv;
  blobs(20, rng, x, y);
  blobs(5, rng, xv, yv);
  MlpModel m = MlpModel::init(2, 1, {8, 8});
  TrainConfig cfg;
  cfg.max_epochs = 5;
  train(m, x, y, xv, yv, cfg);
  tune_threshold(m, xv, yv);
  const auto path = temp_file("model.json");
  m.save(path.string());
  const MlpModel back = MlpModel::load(path.string());
  const Eigen::MatrixXd probes = gaussian(100, 2, rng, 3.0);
  CHECK(back.scores(probes) == m.scores(probes));
  CHECK(back.threshold() == m.threshold());
  CHECK(back.to_json() == m.to_json());
  const auto j = m.to_json();
  for (const char* k : {"schema_version", "input_dim", "layer_dims", "weights", "biases", "scaler_mean", "scaler_std",
                        "threshold", "train_meta"})
    CHECK(j.contains(k));

  std::string text;
  {
    std::ifstream f(path);
    text.assign(std::istreambuf_iterator<char>(f), {});
  }
  {
    std::ofstream f(path);
    f << text.substr(0, text.size() / 2);
  }
  CHECK_THROWS_AS(MlpModel::load(path.string()), DataError);
  auto wrong = j;
  wrong["schema_version"] = 99;
  CHECK_THROWS_AS(MlpModel::from_json(wrong), DataError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(MlpModel::load(path.string()), DataError);

  // A model fit on 89 columns refuses 90-column input.
  MlpModel narrow = MlpModel::init(89, 1, {4});
  narrow.fit_scaler(gaussian(5, 89, rng));
  const MlpModel reread = MlpModel::from_json(nlohmann::json::parse(narrow.to_json().dump()));
  CHECK_THROWS_AS(reread.scores(gaussian(2, 90, rng)), DataError);
}

}
