#include "dehom/vae.hpp"

#include <cmath>

#include "dehom/common.hpp"

namespace dehom {
namespace {

// Flat parameter layout: encoder W1,b1,W2,b2,Wmu,bmu,Wlv,blv then decoder
// W4,b4,W5,b5,W6,b6.
struct Layout {
  int d, h1, h2, L;
  int w1, b1, w2, b2, wmu, bmu, wlv, blv, w4, b4, w5, b5, w6, b6, total;

  Layout(int d_, int h1_, int h2_, int L_) : d(d_), h1(h1_), h2(h2_), L(L_) {
    int at = 0;
    auto take = [&at](int n) {
      int offset = at;
      at += n;
      return offset;
    };
    w1 = take(h1 * d);
    b1 = take(h1);
    w2 = take(h2 * h1);
    b2 = take(h2);
    wmu = take(L * h2);
    bmu = take(L);
    wlv = take(L * h2);
    blv = take(L);
    w4 = take(h2 * L);
    b4 = take(h2);
    w5 = take(h1 * h2);
    b5 = take(h1);
    w6 = take(d * h1);
    b6 = take(d);
    total = at;
  }
};

using MatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MatMutMap = Eigen::Map<Eigen::MatrixXd>;
using VecMutMap = Eigen::Map<Eigen::VectorXd>;

struct Views {
  MatMap w1, w2, wmu, wlv, w4, w5, w6;
  VecMap b1, b2, bmu, blv, b4, b5, b6;
  Views(const Eigen::VectorXd& p, const Layout& l)
      : w1(p.data() + l.w1, l.h1, l.d),
        w2(p.data() + l.w2, l.h2, l.h1),
        wmu(p.data() + l.wmu, l.L, l.h2),
        wlv(p.data() + l.wlv, l.L, l.h2),
        w4(p.data() + l.w4, l.h2, l.L),
        w5(p.data() + l.w5, l.h1, l.h2),
        w6(p.data() + l.w6, l.d, l.h1),
        b1(p.data() + l.b1, l.h1),
        b2(p.data() + l.b2, l.h2),
        bmu(p.data() + l.bmu, l.L),
        blv(p.data() + l.blv, l.L),
        b4(p.data() + l.b4, l.h2),
        b5(p.data() + l.b5, l.h1),
        b6(p.data() + l.b6, l.d) {}
};

void xavier_init(Eigen::VectorXd& p, const Layout& l, std::mt19937_64& rng) {
  p.setZero();
  auto fill = [&](int offset, int rows, int cols) {
    double bound = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int i = 0; i < rows * cols; ++i) p[offset + i] = u(rng);
  };
  fill(l.w1, l.h1, l.d);
  fill(l.w2, l.h2, l.h1);
  fill(l.wmu, l.L, l.h2);
  fill(l.wlv, l.L, l.h2);
  fill(l.w4, l.h2, l.L);
  fill(l.w5, l.h1, l.h2);
  fill(l.w6, l.d, l.h1);
}

}  // namespace

VaeModel::VaeModel(int input_dim, int n_c, const VaeConfig& cfg, std::mt19937_64& rng)
    : input_dim_(input_dim), n_c_(n_c), cfg_(cfg) {
  Layout l(input_dim, cfg.hidden1, cfg.hidden2, cfg.n_lat);
  params_.resize(l.total);
  xavier_init(params_, l, rng);
  mean_ = Eigen::VectorXd::Zero(input_dim);
  sd_ = Eigen::VectorXd::Ones(input_dim);
}

void VaeModel::set_standardization(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd) {
  mean_ = mean;
  sd_ = sd;
}

Eigen::VectorXd VaeModel::standardize(const Eigen::VectorXd& raw) const {
  return (raw - mean_).cwiseQuotient(sd_);
}

Eigen::VectorXd VaeModel::destandardize(const Eigen::VectorXd& std_vec) const {
  return std_vec.cwiseProduct(sd_) + mean_;
}

double VaeModel::loss_and_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps, double beta,
                               Eigen::VectorXd* grad) const {
  const Layout l(input_dim_, cfg_.hidden1, cfg_.hidden2, cfg_.n_lat);
  const Views v(params_, l);
  const int batch = static_cast<int>(x.cols());
  const double inv_b = 1.0 / batch;

  Eigen::MatrixXd h1 = ((v.w1 * x).colwise() + v.b1).array().tanh();
  Eigen::MatrixXd h2 = ((v.w2 * h1).colwise() + v.b2).array().tanh();
  Eigen::MatrixXd mu = (v.wmu * h2).colwise() + v.bmu;
  Eigen::MatrixXd lv = (v.wlv * h2).colwise() + v.blv;
  Eigen::MatrixXd sigma = (0.5 * lv).array().exp();
  Eigen::MatrixXd zlat = mu + sigma.cwiseProduct(eps);
  Eigen::MatrixXd d2 = ((v.w4 * zlat).colwise() + v.b4).array().tanh();
  Eigen::MatrixXd d1 = ((v.w5 * d2).colwise() + v.b5).array().tanh();
  Eigen::MatrixXd xhat = (v.w6 * d1).colwise() + v.b6;

  Eigen::MatrixXd diff = xhat - x;
  double recon = diff.squaredNorm() * inv_b;
  double kl = -0.5 * inv_b *
              (1.0 + lv.array() - mu.array().square() - lv.array().exp()).sum();
  double loss = recon + beta * kl;
  if (!grad) return loss;

  grad->setZero(l.total);
  MatMutMap gw1(grad->data() + l.w1, l.h1, l.d);
  MatMutMap gw2(grad->data() + l.w2, l.h2, l.h1);
  MatMutMap gwmu(grad->data() + l.wmu, l.L, l.h2);
  MatMutMap gwlv(grad->data() + l.wlv, l.L, l.h2);
  MatMutMap gw4(grad->data() + l.w4, l.h2, l.L);
  MatMutMap gw5(grad->data() + l.w5, l.h1, l.h2);
  MatMutMap gw6(grad->data() + l.w6, l.d, l.h1);
  VecMutMap gb1(grad->data() + l.b1, l.h1);
  VecMutMap gb2(grad->data() + l.b2, l.h2);
  VecMutMap gbmu(grad->data() + l.bmu, l.L);
  VecMutMap gblv(grad->data() + l.blv, l.L);
  VecMutMap gb4(grad->data() + l.b4, l.h2);
  VecMutMap gb5(grad->data() + l.b5, l.h1);
  VecMutMap gb6(grad->data() + l.b6, l.d);

  Eigen::MatrixXd dxhat = 2.0 * inv_b * diff;
  gw6 = dxhat * d1.transpose();
  gb6 = dxhat.rowwise().sum();
  Eigen::MatrixXd dd1 = (v.w6.transpose() * dxhat).cwiseProduct(
      (1.0 - d1.array().square()).matrix());
  gw5 = dd1 * d2.transpose();
  gb5 = dd1.rowwise().sum();
  Eigen::MatrixXd dd2 = (v.w5.transpose() * dd1).cwiseProduct(
      (1.0 - d2.array().square()).matrix());
  gw4 = dd2 * zlat.transpose();
  gb4 = dd2.rowwise().sum();
  Eigen::MatrixXd dz = v.w4.transpose() * dd2;

  Eigen::MatrixXd dmu = dz + (beta * inv_b) * mu;
  Eigen::MatrixXd dlv = 0.5 * dz.cwiseProduct(eps).cwiseProduct(sigma) +
                        (0.5 * beta * inv_b) * (lv.array().exp() - 1.0).matrix();
  gwmu = dmu * h2.transpose();
  gbmu = dmu.rowwise().sum();
  gwlv = dlv * h2.transpose();
  gblv = dlv.rowwise().sum();

  Eigen::MatrixXd dh2 = (v.wmu.transpose() * dmu + v.wlv.transpose() * dlv)
                            .cwiseProduct((1.0 - h2.array().square()).matrix());
  gw2 = dh2 * h1.transpose();
  gb2 = dh2.rowwise().sum();
  Eigen::MatrixXd dh1 =
      (v.w2.transpose() * dh2).cwiseProduct((1.0 - h1.array().square()).matrix());
  gw1 = dh1 * x.transpose();
  gb1 = dh1.rowwise().sum();
  return loss;
}

void VaeModel::loss_components(const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps, double* recon,
                               double* kl) const {
  const Layout l(input_dim_, cfg_.hidden1, cfg_.hidden2, cfg_.n_lat);
  const Views v(params_, l);
  const double inv_b = 1.0 / x.cols();
  Eigen::MatrixXd h1 = ((v.w1 * x).colwise() + v.b1).array().tanh();
  Eigen::MatrixXd h2 = ((v.w2 * h1).colwise() + v.b2).array().tanh();
  Eigen::MatrixXd mu = (v.wmu * h2).colwise() + v.bmu;
  Eigen::MatrixXd lv = (v.wlv * h2).colwise() + v.blv;
  Eigen::MatrixXd sigma = (0.5 * lv).array().exp();
  Eigen::MatrixXd zlat = mu + sigma.cwiseProduct(eps);
  Eigen::MatrixXd d2 = ((v.w4 * zlat).colwise() + v.b4).array().tanh();
  Eigen::MatrixXd d1 = ((v.w5 * d2).colwise() + v.b5).array().tanh();
  Eigen::MatrixXd xhat = (v.w6 * d1).colwise() + v.b6;
  *recon = (xhat - x).squaredNorm() * inv_b;
  *kl = -0.5 * inv_b * (1.0 + lv.array() - mu.array().square() - lv.array().exp()).sum();
}

Eigen::VectorXd VaeModel::encode_mean(const Eigen::VectorXd& x_std) const {
  const Layout l(input_dim_, cfg_.hidden1, cfg_.hidden2, cfg_.n_lat);
  const Views v(params_, l);
  Eigen::VectorXd h1 = (v.w1 * x_std + v.b1).array().tanh();
  Eigen::VectorXd h2 = (v.w2 * h1 + v.b2).array().tanh();
  return v.wmu * h2 + v.bmu;
}

Eigen::VectorXd VaeModel::decode(const Eigen::VectorXd& z_lat) const {
  const Layout l(input_dim_, cfg_.hidden1, cfg_.hidden2, cfg_.n_lat);
  const Views v(params_, l);
  Eigen::VectorXd d2 = (v.w4 * z_lat + v.b4).array().tanh();
  Eigen::VectorXd d1 = (v.w5 * d2 + v.b5).array().tanh();
  return v.w6 * d1 + v.b6;
}

Eigen::VectorXd flatten_design(const ReducedDesign& z) {
  Eigen::VectorXd v(z.z.size());
  int at = 0;
  for (int c = 0; c < z.z.cols(); ++c)
    for (int k = 0; k < z.z.rows(); ++k) v[at++] = z.z(k, c);
  return v;
}

ReducedDesign unflatten_design(const Eigen::VectorXd& v, int n_c, std::uint64_t basis_id) {
  ReducedDesign rd;
  rd.basis_id = basis_id;
  rd.z.resize(n_c, 3);
  int at = 0;
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < n_c; ++k) rd.z(k, c) = v[at++];
  return rd;
}

VaeModel train_vae(const std::vector<ReducedDesign>& elite, const VaeConfig& cfg,
                   std::mt19937_64& rng) {
  if (elite.size() < 8) throw ConfigError("train_vae: need at least 8 elite designs");
  const int n_c = static_cast<int>(elite.front().z.rows());
  const int d = 3 * n_c;
  const int batch = static_cast<int>(elite.size());

  Eigen::MatrixXd raw(d, batch);
  for (int k = 0; k < batch; ++k) raw.col(k) = flatten_design(elite[k]);
  Eigen::VectorXd mean = raw.rowwise().mean();
  Eigen::VectorXd sd(d);
  for (int i = 0; i < d; ++i) {
    double var = (raw.row(i).array() - mean[i]).square().sum() / batch;
    sd[i] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  Eigen::MatrixXd x = (raw.colwise() - mean).array().colwise() / sd.array();

  VaeModel model(d, n_c, cfg, rng);
  model.set_standardization(mean, sd);

  Eigen::VectorXd grad(model.params().size());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(model.params().size());
  Eigen::VectorXd v2 = Eigen::VectorXd::Zero(model.params().size());
  const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd eps(cfg.n_lat, batch);
  double loss = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (int i = 0; i < eps.size(); ++i) eps.data()[i] = gauss(rng);
    loss = model.loss_and_grad(x, eps, cfg.beta, &grad);
    if (!std::isfinite(loss))
      throw NumericError("train_vae: non-finite loss at epoch " + std::to_string(epoch));
    m = b1 * m + (1.0 - b1) * grad;
    v2 = b2 * v2 + (1.0 - b2) * grad.cwiseProduct(grad);
    double mc = 1.0 - std::pow(b1, epoch);
    double vc = 1.0 - std::pow(b2, epoch);
    model.params() -=
        (cfg.lr / mc) * m.cwiseQuotient(((v2 / vc).cwiseSqrt().array() + adam_eps).matrix());
  }
  double recon = 0.0, kl = 0.0;
  model.loss_components(x, Eigen::MatrixXd::Zero(cfg.n_lat, batch), &recon, &kl);
  model.final_recon = recon;
  model.final_kl = kl;
  model.final_loss = loss;
  return model;
}

ReducedDesign crossover_pair(const VaeModel& model, const ReducedDesign& a, const ReducedDesign& b,
                             double t, double jitter, const Eigen::VectorXd& noise,
                             std::uint64_t basis_id) {
  Eigen::VectorXd za = model.encode_mean(model.standardize(flatten_design(a)));
  Eigen::VectorXd zb = model.encode_mean(model.standardize(flatten_design(b)));
  double na = za.norm(), nb = zb.norm();
  Eigen::VectorXd child;
  double cos_omega = (na > 1e-12 && nb > 1e-12) ? za.dot(zb) / (na * nb) : 1.0;
  cos_omega = std::clamp(cos_omega, -1.0, 1.0);
  double omega = std::acos(cos_omega);
  if (std::sin(omega) < 1e-9) {
    child = (1.0 - t) * za + t * zb;  // parallel or near-zero: fall back to lerp
  } else {
    child = (std::sin((1.0 - t) * omega) * za + std::sin(t * omega) * zb) / std::sin(omega);
  }
  if (jitter > 0.0) child += jitter * noise;
  return unflatten_design(model.destandardize(model.decode(child)), model.n_c(), basis_id);
}

std::vector<ReducedDesign> crossover(const VaeModel& model, const std::vector<ReducedDesign>& elite,
                                     int n_offspring, double jitter, std::mt19937_64& rng) {
  if (elite.size() < 2) throw ConfigError("crossover: need at least 2 elite designs");
  std::uniform_int_distribution<int> pick(0, static_cast<int>(elite.size()) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<ReducedDesign> out;
  out.reserve(n_offspring);
  for (int k = 0; k < n_offspring; ++k) {
    int ia = pick(rng);
    int ib = pick(rng);
    while (ib == ia) ib = pick(rng);
    double t = unit(rng);
    Eigen::VectorXd noise(model.n_lat());
    for (int i = 0; i < noise.size(); ++i) noise[i] = gauss(rng);
    out.push_back(crossover_pair(model, elite[ia], elite[ib], t, jitter, noise,
                                 elite[ia].basis_id));
  }
  return out;
}

}  // namespace dehom
