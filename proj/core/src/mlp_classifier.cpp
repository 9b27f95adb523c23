#include "hhlc/mlp_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hhlc/error.hpp"
#include "hhlc/eval_metrics.hpp"
#include "hhlc/random.hpp"

namespace hhlc {

namespace {

constexpr double kLogitClamp = 30.0;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) throw DataError(std::string("model: bad shape for ") + what);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw DataError(std::string("model: bad shape for ") + what);
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::RowVectorXd row_from(const nlohmann::json& j, Eigen::Index cols, const char* what) {
  const std::vector<double> v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != cols) throw DataError(std::string("model: bad length for ") + what);
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), cols);
}

std::vector<int> binary_labels(const Eigen::VectorXd& y) {
  std::vector<int> out(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw DataError("labels must be 0 or 1");
    out[static_cast<std::size_t>(i)] = y(i) == 1.0 ? 1 : 0;
  }
  return out;
}

bool has_both_classes(const std::vector<int>& labels) {
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  return pos > 0 && pos < static_cast<std::ptrdiff_t>(labels.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw DataError("train: lr0 must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DataError("train: momentum must lie in [0, 1)");
  if (patience < 1) throw DataError("train: patience must be at least 1");
  if (!(lr_decay_divisor > 1.0)) throw DataError("train: lr decay divisor must exceed 1");
  if (max_epochs < 1) throw DataError("train: max_epochs must be at least 1");
  if (batch_size < 1) throw DataError("train: batch_size must be at least 1");
  if (!(early_stop_tolerance >= 0.0)) throw DataError("train: early_stop_tolerance must be non-negative");
}

LrSchedule::LrSchedule(const TrainConfig& cfg)
    : lr_(cfg.lr0),
      divisor_(cfg.lr_decay_divisor),
      min_lr_(cfg.min_lr),
      tolerance_(cfg.early_stop_tolerance),
      patience_(cfg.patience),
      best_(std::numeric_limits<double>::infinity()) {}

bool LrSchedule::step(double val_loss) {
  if (val_loss < best_ - tolerance_) {
    best_ = val_loss;
    stagnant_ = 0;
    return true;
  }
  if (++stagnant_ >= patience_) {
    lr_ /= divisor_;
    stagnant_ = 0;
  }
  return false;
}

MlpModel MlpModel::init(int input_dim, std::uint64_t seed, const std::vector<int>& hidden) {
  if (input_dim < 1) throw DataError("MlpModel::init: input_dim must be at least 1");
  MlpModel m;
  m.layer_dims_.push_back(input_dim);
  m.layer_dims_.insert(m.layer_dims_.end(), hidden.begin(), hidden.end());
  m.layer_dims_.push_back(1);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < m.layer_dims_.size(); ++l) {
    const int fan_in = m.layer_dims_[l];
    const int fan_out = m.layer_dims_[l + 1];
    if (fan_out < 1) throw DataError("MlpModel::init: layer widths must be positive");
    const bool output = l + 2 == m.layer_dims_.size();
    const double limit = output ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
    Layer layer;
    layer.w.resize(fan_in, fan_out);
    for (Eigen::Index c = 0; c < fan_out; ++c)
      for (Eigen::Index r = 0; r < fan_in; ++r) layer.w(r, c) = rng.uniform(-limit, limit);
    layer.b = Eigen::RowVectorXd::Zero(fan_out);
    m.layers_.push_back(std::move(layer));
  }
  m.mean_ = Eigen::RowVectorXd::Zero(input_dim);
  m.std_ = Eigen::RowVectorXd::Ones(input_dim);
  return m;
}

void MlpModel::check_width(Eigen::Index cols) const {
  if (cols != input_dim()) {
    throw DataError("model expects " + std::to_string(input_dim()) + " features, got " + std::to_string(cols));
  }
}

void MlpModel::fit_scaler(const Eigen::MatrixXd& x) {
  check_width(x.cols());
  if (x.rows() == 0) throw DataError("fit_scaler: no rows");
  mean_ = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean_;
  std_ = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
  for (Eigen::Index c = 0; c < std_.size(); ++c)
    if (!(std_(c) > 0.0)) std_(c) = 1.0;
}

Eigen::MatrixXd MlpModel::standardize(const Eigen::MatrixXd& x) const {
  check_width(x.cols());
  return (x.rowwise() - mean_).array().rowwise() / std_.array();
}

Eigen::VectorXd MlpModel::logits(const Eigen::MatrixXd& xs) const {
  check_width(xs.cols());
  Eigen::MatrixXd a = xs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = a * layers_[l].w;
    z.rowwise() += layers_[l].b;
    a = l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a.col(0);
}

Eigen::VectorXd MlpModel::scores(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd z = logits(standardize(x));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = sigmoid(std::clamp(z(i), -kLogitClamp, kLogitClamp));
  return z;
}

double MlpModel::score(const Eigen::VectorXd& x) const { return scores(x.transpose())(0); }

std::vector<int> MlpModel::predict(const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd s = scores(x);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) > threshold_ ? 1 : 0;
  return out;
}

int MlpModel::predict(const Eigen::VectorXd& x) const { return score(x) > threshold_ ? 1 : 0; }

void MlpModel::set_threshold(double t) {
  if (!(t > 0.0 && t < 1.0)) throw DataError("threshold must lie in (0, 1)");
  threshold_ = t;
}

double MlpModel::loss(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y) const {
  const Eigen::VectorXd z = logits(xs);
  if (y.size() != z.size()) throw DataError("loss: label count mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double zc = std::clamp(z(i), -kLogitClamp, kLogitClamp);
    total += softplus(zc) - y(i) * zc;
  }
  return total / static_cast<double>(z.size());
}

double MlpModel::loss_and_gradients(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y,
                                    std::vector<Layer>& grads) const {
  check_width(xs.cols());
  const Eigen::Index n = xs.rows();
  if (y.size() != n) throw DataError("gradients: label count mismatch");
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers_.size() + 1);
  acts.push_back(xs);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = acts.back() * layers_[l].w;
    z.rowwise() += layers_[l].b;
    acts.push_back(l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
  }

  double total = 0.0;
  Eigen::MatrixXd delta(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = acts.back()(i, 0);
    const double zc = std::clamp(z, -kLogitClamp, kLogitClamp);
    total += softplus(zc) - y(i) * zc;
    const bool clamped = z < -kLogitClamp || z > kLogitClamp;
    delta(i, 0) = clamped ? 0.0 : (sigmoid(zc) - y(i)) / static_cast<double>(n);
  }

  grads.resize(layers_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grads[l].w.noalias() = acts[l].transpose() * delta;
    grads[l].b = delta.colwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = delta * layers_[l].w.transpose();
    // ReLU derivative from the stored activation (positive iff active).
    delta = (acts[l].array() > 0.0).select(back, 0.0);
  }
  return total / static_cast<double>(n);
}

std::vector<Layer> MlpModel::gradients(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y) const {
  std::vector<Layer> g;
  loss_and_gradients(xs, y, g);
  return g;
}

nlohmann::json MlpModel::to_json() const {
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (const auto& layer : layers_) {
    weights.push_back(matrix_json(layer.w));
    biases.push_back(std::vector<double>(layer.b.data(), layer.b.data() + layer.b.size()));
  }
  return {{"schema_version", kModelSchemaVersion},
          {"input_dim", input_dim()},
          {"layer_dims", layer_dims_},
          {"weights", weights},
          {"biases", biases},
          {"scaler_mean", std::vector<double>(mean_.data(), mean_.data() + mean_.size())},
          {"scaler_std", std::vector<double>(std_.data(), std_.data() + std_.size())},
          {"threshold", threshold_},
          {"train_meta", train_meta}};
}

MlpModel MlpModel::from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw DataError("model: not a JSON object");
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw DataError("model: schema_version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kModelSchemaVersion) + ")");
    }
    MlpModel m;
    m.layer_dims_ = j.at("layer_dims").get<std::vector<int>>();
    if (m.layer_dims_.size() < 2 || m.layer_dims_.back() != 1) throw DataError("model: bad layer_dims");
    if (j.at("input_dim").get<int>() != m.layer_dims_.front()) throw DataError("model: input_dim disagrees with layer_dims");
    const auto& w = j.at("weights");
    const auto& b = j.at("biases");
    const std::size_t count = m.layer_dims_.size() - 1;
    if (w.size() != count || b.size() != count) throw DataError("model: layer count mismatch");
    for (std::size_t l = 0; l < count; ++l) {
      Layer layer;
      layer.w = matrix_from(w[l], m.layer_dims_[l], m.layer_dims_[l + 1], "weights");
      layer.b = row_from(b[l], m.layer_dims_[l + 1], "biases");
      m.layers_.push_back(std::move(layer));
    }
    m.mean_ = row_from(j.at("scaler_mean"), m.layer_dims_.front(), "scaler_mean");
    m.std_ = row_from(j.at("scaler_std"), m.layer_dims_.front(), "scaler_std");
    m.set_threshold(j.at("threshold").get<double>());
    m.train_meta = j.value("train_meta", nlohmann::json::object());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

void MlpModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path);
  out << to_json().dump() << '\n';
  if (!out) throw DataError("error writing model file " + path);
}

MlpModel MlpModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read model file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file " + path + ": " + e.what());
  }
  return from_json(j);
}

TrainHistory train(MlpModel& model, const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                   const Eigen::MatrixXd& x_val, const Eigen::VectorXd& y_val, const TrainConfig& cfg) {
  cfg.validate();
  if (x_train.rows() == 0 || x_val.rows() == 0) throw DataError("train: training and validation sets must be non-empty");
  if (x_train.rows() != y_train.size() || x_val.rows() != y_val.size()) throw DataError("train: label count mismatch");
  if (!has_both_classes(binary_labels(y_train))) throw DataError("train: training set needs both classes");
  binary_labels(y_val);

  model.fit_scaler(x_train);
  const Eigen::MatrixXd xs = model.standardize(x_train);
  const Eigen::MatrixXd xv = model.standardize(x_val);

  std::vector<Layer>& layers = model.layers();
  std::vector<Layer> velocity(layers.size()), grads;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    velocity[l].w = Eigen::MatrixXd::Zero(layers[l].w.rows(), layers[l].w.cols());
    velocity[l].b = Eigen::RowVectorXd::Zero(layers[l].b.size());
  }
  std::vector<Layer> best = layers;

  LrSchedule schedule(cfg);
  TrainHistory history;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(xs.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;

  for (int epoch = 0; epoch < cfg.max_epochs && !schedule.exhausted(); ++epoch) {
    Rng rng(derive_seed(cfg.seed, epoch));
    rng.shuffle(std::span<Eigen::Index>(order));
    double loss_sum = 0.0;
    const double lr = schedule.lr();
    for (Eigen::Index start = 0; start < xs.rows(); start += batch) {
      const Eigen::Index m = std::min(batch, xs.rows() - start);
      xb.resize(m, xs.cols());
      yb.resize(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        xb.row(r) = xs.row(order[static_cast<std::size_t>(start + r)]);
        yb(r) = y_train(order[static_cast<std::size_t>(start + r)]);
      }
      const double batch_loss = model.loss_and_gradients(xb, yb, grads);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at row " +
                           std::to_string(start) + " (lr " + std::to_string(lr) + ")");
      }
      loss_sum += batch_loss * static_cast<double>(m);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        velocity[l].w = cfg.momentum * velocity[l].w - lr * grads[l].w;
        velocity[l].b = cfg.momentum * velocity[l].b - lr * grads[l].b;
        layers[l].w += velocity[l].w;
        layers[l].b += velocity[l].b;
      }
    }
    const double val_loss = model.loss(xv, y_val);
    if (!std::isfinite(val_loss)) throw NumericError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    history.epochs.push_back({epoch, loss_sum / static_cast<double>(xs.rows()), val_loss, lr});
    if (schedule.step(val_loss)) {
      best = layers;
      history.best_epoch = epoch;
    }
  }
  layers = best;
  history.best_val_loss = schedule.best();

  model.train_meta = {{"epochs", history.epochs.size()},
                      {"best_epoch", history.best_epoch},
                      {"best_val_loss", history.best_val_loss},
                      {"final_lr", schedule.lr()},
                      {"train_rows", x_train.rows()},
                      {"val_rows", x_val.rows()},
                      {"lr0", cfg.lr0},
                      {"momentum", cfg.momentum},
                      {"patience", cfg.patience},
                      {"batch_size", cfg.batch_size},
                      {"max_epochs", cfg.max_epochs},
                      {"seed", cfg.seed}};
  return history;
}

double best_threshold(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(scores.size()) != labels.size()) throw DataError("tune_threshold: size mismatch");
  if (!has_both_classes(labels)) throw DataError("tune_threshold: validation set needs both classes");
  std::vector<double> sorted(scores.data(), scores.data() + scores.size());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<double> candidates = {0.5};
  if (sorted.size() == 1) candidates.push_back(sorted.front());
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  std::sort(candidates.begin(), candidates.end());

  double best = candidates.front();
  double best_score = -1.0;
  std::vector<int> preds(labels.size());
  for (double t : candidates) {
    if (!(t > 0.0 && t < 1.0)) continue;
    for (std::size_t i = 0; i < labels.size(); ++i) preds[i] = scores(static_cast<Eigen::Index>(i)) > t ? 1 : 0;
    const double ba = balanced_accuracy(preds, labels);
    if (ba > best_score) {
      best_score = ba;
      best = t;
    }
  }
  return best;
}

double tune_threshold(MlpModel& model, const Eigen::MatrixXd& x_val, const Eigen::VectorXd& y_val) {
  const double t = best_threshold(model.scores(x_val), binary_labels(y_val));
  model.set_threshold(t);
  return t;
}

}  // namespace hhlc
