#include <doctest.h>

#include <random>
#include <sstream>

#include "../oracle.hpp"
#include "hhlc/error.hpp"
#include "hhlc/eval_metrics.hpp"

using namespace hhlc;

namespace {

// Predicts the class of the nearer class centroid.
Classifier centroid_fit(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  Eigen::RowVectorXd c0 = Eigen::RowVectorXd::Zero(x.cols()), c1 = c0;
  int n0 = 0, n1 = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (y[static_cast<std::size_t>(i)]) {
      c1 += x.row(i);
      ++n1;
    } else {
      c0 += x.row(i);
      ++n0;
    }
  }
  c0 /= n0;
  c1 /= n1;
  return [c0, c1](const Eigen::MatrixXd& q) {
    std::vector<int> p;
    for (Eigen::Index i = 0; i < q.rows(); ++i) p.push_back((q.row(i) - c1).norm() < (q.row(i) - c0).norm() ? 1 : 0);
    return p;
  };
}

}  // namespace

TEST_SUITE("eval_metrics") {

TEST_CASE("confusion examples") {
  const std::vector<int> a = {1, 0};
  const ConfusionMatrix cm = confusion(a, a);
  CHECK(cm.tp == 1);
  CHECK(cm.tn == 1);
  CHECK(cm.fp + cm.fn == 0);
  const std::vector<int> p = {1, 0, 1}, y = {0, 1, 0};
  const ConfusionMatrix w = confusion(p, y);
  CHECK(w.tp + w.tn == 0);
  const std::vector<int> shorter = {1};
  CHECK_THROWS_AS(confusion(shorter, a), DataError);
  const std::vector<int> three = {2, 0};
  CHECK_THROWS_AS(confusion(three, a), DataError);
}

TEST_CASE("confusion fuzz against a recount") {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> p(1000), y(1000);
    for (int i = 0; i < 1000; ++i) {
      p[static_cast<std::size_t>(i)] = coin(rng);
      y[static_cast<std::size_t>(i)] = coin(rng);
    }
    const ConfusionMatrix cm = confusion(p, y);
    const oracle::Counts c = oracle::count(p, y);
    CHECK(cm.total() == 1000);
    CHECK(cm.tp == static_cast<std::size_t>(c.tp));
    CHECK(cm.fp == static_cast<std::size_t>(c.fp));
    CHECK(cm.tn == static_cast<std::size_t>(c.tn));
    CHECK(cm.fn == static_cast<std::size_t>(c.fn));
    const ScoreReport r = report(cm);
    CHECK(r.accuracy == doctest::Approx(static_cast<double>(c.tp + c.tn) / 1000));
    CHECK(r.recall == doctest::Approx(static_cast<double>(c.tp) / (c.tp + c.fn)));
    CHECK(r.specificity == doctest::Approx(static_cast<double>(c.tn) / (c.tn + c.fp)));
    CHECK(r.precision == doctest::Approx(static_cast<double>(c.tp) / (c.tp + c.fp)));
    CHECK(r.f1 <= std::max(r.precision, r.recall));
    CHECK(r.f1 >= std::min(r.precision, r.recall));
  }
}

TEST_CASE("report examples") {
  const ScoreReport perfect = report({5, 0, 7, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.specificity == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.balanced_accuracy == 1.0);

  ConfusionMatrix cm;
  cm.tp = 8;
  cm.fn = 2;
  cm.tn = 1;
  cm.fp = 9;
  const ScoreReport r = report(cm);
  CHECK(r.recall == doctest::Approx(0.8));
  CHECK(r.specificity == doctest::Approx(0.1));
  CHECK(r.balanced_accuracy == doctest::Approx(0.45));

  CHECK_THROWS_AS(report(ConfusionMatrix{}), DataError);
}

TEST_CASE("undefined ratios are zero and flagged") {
  ConfusionMatrix cm;
  cm.tn = 4;
  const ScoreReport r = report(cm);
  CHECK(r.precision == 0.0);
  CHECK(r.precision_undefined);
  CHECK(r.recall_undefined);
  CHECK(r.f1_undefined);
  CHECK_FALSE(r.specificity_undefined);
  const auto j = to_json(r);
  CHECK(j["undefined"].size() == 3);
}

TEST_CASE("F1 formula and its inversion") {
  CHECK(f1_score(1.0, 1.0) == 1.0);
  CHECK(f1_score(0.5, 1.0) == doctest::Approx(2.0 / 3.0));
  CHECK(f1_score(0.0, 0.0) == 0.0);
  CHECK(precision_from_f1(0.753, 0.691) == doctest::Approx(0.827).epsilon(1e-3));
  CHECK(f1_score(precision_from_f1(0.753, 0.691), 0.691) == doctest::Approx(0.753));
  CHECK_THROWS_AS(precision_from_f1(0.9, 0.4), DataError);
}

TEST_CASE("metric identities") {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> y(30);
    for (auto& v : y) v = coin(rng);
    y[0] = 0;
    y[1] = 1;
    const ScoreReport self = report(confusion(y, y));
    CHECK(self.accuracy == 1.0);
    CHECK(self.f1 == 1.0);
    CHECK(self.balanced_accuracy == 1.0);
    const std::vector<int> all_pos(y.size(), 1);
    CHECK(balanced_accuracy(all_pos, y) == 0.5);
  }
}

TEST_CASE("report CSV layout") {
  std::ostringstream os;
  write_report_csv(os, {{"d1", "test", report({1, 0, 1, 0})}});
  CHECK(os.str() == "dataset_variant,split_name,accuracy,f1,recall,specificity,balanced_accuracy\n"
                    "d1,test,1.0,1.0,1.0,1.0,1.0\n");
}

TEST_CASE("stratified folds") {
  std::vector<int> y(50);
  for (int i = 0; i < 50; ++i) y[static_cast<std::size_t>(i)] = i < 20;
  const auto f = stratified_folds(y, 5, 3);
  std::vector<int> size(5), pos(5);
  for (std::size_t i = 0; i < y.size(); ++i) {
    ++size[static_cast<std::size_t>(f[i])];
    pos[static_cast<std::size_t>(f[i])] += y[i];
  }
  for (int k = 0; k < 5; ++k) {
    CHECK(size[static_cast<std::size_t>(k)] == 10);
    CHECK(pos[static_cast<std::size_t>(k)] == 4);
  }
  CHECK(stratified_folds(y, 5, 3) == f);
  CHECK_THROWS_AS(stratified_folds(std::vector<int>{1, 1, 1, 0}, 2, 1), DataError);
  CHECK_THROWS_AS(stratified_folds(y, 1, 1), DataError);
}

TEST_CASE("learning curve arithmetic and determinism") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  const int n = 200;
  Eigen::MatrixXd x(n, 3);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2;
    for (int c = 0; c < 3; ++c) x(i, c) = g(rng) + (i % 2 ? 0.8 : -0.8);
  }
  std::vector<std::size_t> train_sizes;
  const ClassifierFactory factory = [&](const Eigen::MatrixXd& xs, const std::vector<int>& ys, std::uint64_t) {
    train_sizes.push_back(static_cast<std::size_t>(xs.rows()));
    return centroid_fit(xs, ys);
  };
  const auto curve = learning_curve(factory, x, y, 5, {0.5, 1.0}, 9);
  REQUIRE(curve.size() == 2);
  REQUIRE(train_sizes.size() == 10);
  for (int k = 5; k < 10; ++k) CHECK(train_sizes[static_cast<std::size_t>(k)] == 160);  // 80% of the data
  for (int k = 0; k < 5; ++k) CHECK(train_sizes[static_cast<std::size_t>(k)] == 80);
  for (const auto& p : curve) {
    CHECK(p.val_mean > 0.7);
    CHECK(p.train_std >= 0.0);
  }
  const auto again = learning_curve(factory, x, y, 5, {0.5, 1.0}, 9);
  CHECK(again[1].val_mean == curve[1].val_mean);
  CHECK(again[0].train_std == curve[0].train_std);
  CHECK_THROWS_AS(learning_curve(factory, x, y, 5, {0.0}, 9), DataError);
  CHECK_THROWS_AS(learning_curve(factory, x, y, 1, {0.5}, 9), DataError);

  std::ostringstream os;
  write_curve_csv(os, curve);
  CHECK(os.str().rfind("fraction,train_mean,train_std,val_mean,val_std\n", 0) == 0);
}

TEST_CASE("default curve grid") {
  const auto g = default_curve_grid();
  REQUIRE(g.size() == 10);
  CHECK(g.front() == doctest::Approx(0.1));
  CHECK(g.back() == 1.0);
}

}
