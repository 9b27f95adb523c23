#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace hhlc {

inline constexpr int kModelSchemaVersion = 1;

// Five hidden layers: 512 then four of 256.
inline const std::vector<int> kDefaultHidden = {512, 256, 256, 256, 256};

struct TrainConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  int patience = 15;             // epochs without validation improvement
  double lr_decay_divisor = 5.0;
  double min_lr = 1e-6;          // training stops once the rate falls below
  int max_epochs = 500;
  int batch_size = 64;
  double early_stop_tolerance = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

// Divides the learning rate after `patience` consecutive epochs without a
// validation-loss improvement larger than the tolerance.
class LrSchedule {
 public:
  explicit LrSchedule(const TrainConfig& cfg);

  double lr() const { return lr_; }
  double best() const { return best_; }
  bool exhausted() const { return lr_ < min_lr_; }
  // Records one epoch; returns true when this epoch improved the best loss.
  bool step(double val_loss);

 private:
  double lr_;
  double divisor_;
  double min_lr_;
  double tolerance_;
  int patience_;
  int stagnant_ = 0;
  double best_;
};

struct Layer {
  Eigen::MatrixXd w;     // fan_in x fan_out
  Eigen::RowVectorXd b;  // 1 x fan_out
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

class MlpModel {
 public:
  MlpModel() = default;

  // He-uniform hidden layers, Glorot-uniform output, zero biases.
  static MlpModel init(int input_dim, std::uint64_t seed, const std::vector<int>& hidden = kDefaultHidden);

  int input_dim() const { return layer_dims_.empty() ? 0 : layer_dims_.front(); }
  const std::vector<int>& layer_dims() const { return layer_dims_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // z-score scaler; zero-variance features keep unit scale.
  void fit_scaler(const Eigen::MatrixXd& x);
  Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) const;
  const Eigen::RowVectorXd& scaler_mean() const { return mean_; }
  const Eigen::RowVectorXd& scaler_std() const { return std_; }

  // Output-layer pre-activations for standardized rows.
  Eigen::VectorXd logits(const Eigen::MatrixXd& xs) const;
  // Sigmoid scores for raw rows (the stored scaler is applied).
  Eigen::VectorXd scores(const Eigen::MatrixXd& x) const;
  double score(const Eigen::VectorXd& x) const;

  // score > threshold.
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
  int predict(const Eigen::VectorXd& x) const;

  double threshold() const { return threshold_; }
  void set_threshold(double t);

  // Mean binary cross-entropy on standardized rows, logits clamped to +-30.
  double loss(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y) const;
  // Gradient of `loss` with respect to every weight and bias.
  std::vector<Layer> gradients(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y) const;
  // Same, also returning the loss; used by the trainer.
  double loss_and_gradients(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y, std::vector<Layer>& grads) const;

  nlohmann::json train_meta = nlohmann::json::object();

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static MlpModel load(const std::string& path);

 private:
  void check_width(Eigen::Index cols) const;

  std::vector<int> layer_dims_;
  std::vector<Layer> layers_;
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd std_;
  double threshold_ = 0.5;
};

// Mini-batch SGD with momentum on binary cross-entropy. Fits the scaler on
// the training rows, keeps the weights of the best validation epoch, and
// records the run in train_meta. Throws NumericError on a non-finite loss.
TrainHistory train(MlpModel& model, const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                   const Eigen::MatrixXd& x_val, const Eigen::VectorXd& y_val, const TrainConfig& cfg);

// Threshold maximizing balanced accuracy over the midpoints of the sorted
// unique validation scores (and 0.5); ties go to the smallest. Stored on the
// model and returned.
double tune_threshold(MlpModel& model, const Eigen::MatrixXd& x_val, const Eigen::VectorXd& y_val);

// The candidate sweep on its own, for precomputed scores.
double best_threshold(const Eigen::VectorXd& scores, const std::vector<int>& labels);

}  // namespace hhlc
