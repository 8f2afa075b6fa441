#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "dehom/pca.hpp"

namespace dehom {

struct VaeConfig {
  int n_lat = 8;
  int hidden1 = 64;
  int hidden2 = 32;
  int epochs = 400;
  double lr = 1e-3;
  double beta = 1e-3;
};

// Fully connected VAE with two hidden tanh layers in encoder and decoder,
// trained full-batch with Adam on standardized inputs. All parameters live
// in one flat vector so gradients can be checked against finite differences.
class VaeModel {
 public:
  VaeModel() = default;
  VaeModel(int input_dim, int n_c, const VaeConfig& cfg, std::mt19937_64& rng);

  int input_dim() const { return input_dim_; }
  int n_lat() const { return cfg_.n_lat; }
  int n_c() const { return n_c_; }
  const VaeConfig& config() const { return cfg_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  // Loss (mean over the batch of squared reconstruction error plus
  // beta-weighted KL divergence) and, when grad is non-null, its gradient
  // w.r.t. the flat parameter vector. Columns of x are standardized samples;
  // eps carries the reparameterization noise (n_lat x batch).
  double loss_and_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps, double beta,
                       Eigen::VectorXd* grad) const;

  // KL and reconstruction parts evaluated separately on a probe batch.
  void loss_components(const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps, double* recon,
                       double* kl) const;

  // Standardization stats captured from the training set.
  const Eigen::VectorXd& input_mean() const { return mean_; }
  const Eigen::VectorXd& input_sd() const { return sd_; }
  void set_standardization(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd);

  Eigen::VectorXd standardize(const Eigen::VectorXd& raw) const;
  Eigen::VectorXd destandardize(const Eigen::VectorXd& std) const;

  Eigen::VectorXd encode_mean(const Eigen::VectorXd& x_std) const;
  Eigen::VectorXd decode(const Eigen::VectorXd& z_lat) const;

  double final_loss = 0.0;
  double final_recon = 0.0;
  double final_kl = 0.0;

 private:
  int input_dim_ = 0;
  int n_c_ = 0;
  VaeConfig cfg_;
  Eigen::VectorXd params_;
  Eigen::VectorXd mean_, sd_;
};

Eigen::VectorXd flatten_design(const ReducedDesign& z);
ReducedDesign unflatten_design(const Eigen::VectorXd& v, int n_c, std::uint64_t basis_id);

// Trains on the elite set (size >= 8); deterministic given the rng state.
VaeModel train_vae(const std::vector<ReducedDesign>& elite, const VaeConfig& cfg,
                   std::mt19937_64& rng);

// One latent-space child: spherical interpolation between the encoded means
// of two parents at parameter t plus jitter * noise, decoded back.
ReducedDesign crossover_pair(const VaeModel& model, const ReducedDesign& a, const ReducedDesign& b,
                             double t, double jitter, const Eigen::VectorXd& noise,
                             std::uint64_t basis_id);

std::vector<ReducedDesign> crossover(const VaeModel& model, const std::vector<ReducedDesign>& elite,
                                     int n_offspring, double jitter, std::mt19937_64& rng);

}  // namespace dehom
