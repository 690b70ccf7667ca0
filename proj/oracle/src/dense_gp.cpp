#include "rcamp_oracle/dense_gp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "rcamp/rng.hpp"

namespace rcamp::oracle {

namespace {

double se(const Vec2& a, const Vec2& b, const grf::Hyperparams& h) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  return h.sigma_e * h.sigma_e * std::exp(-(dx * dx + dy * dy) / (h.sigma_w * h.sigma_w));
}

Eigen::MatrixXd noisy_gram(std::span<const grf::TrainingSample> s, const grf::Hyperparams& h) {
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = se(s[i].position, s[j].position, h);
    a(i, i) += h.sigma_n * h.sigma_n;
  }
  return a;
}

Eigen::VectorXd residuals(std::span<const grf::TrainingSample> s, const grf::Hyperparams& h) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) r(static_cast<Eigen::Index>(i)) = s[i].rss - h.c_mean;
  return r;
}

}  // namespace

DensePrediction dense_predict(std::span<const grf::TrainingSample> samples, const grf::Hyperparams& h,
                              std::span<const Vec2> queries) {
  const Eigen::MatrixXd a_inv = noisy_gram(samples, h).fullPivLu().inverse();
  const Eigen::VectorXd r = residuals(samples, h);
  const auto n = static_cast<Eigen::Index>(samples.size());
  DensePrediction out;
  out.mean.resize(static_cast<Eigen::Index>(queries.size()));
  out.variance.resize(static_cast<Eigen::Index>(queries.size()));
  Eigen::VectorXd k(n);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (Eigen::Index i = 0; i < n; ++i) k(i) = se(samples[i].position, queries[q], h);
    const auto qi = static_cast<Eigen::Index>(q);
    out.mean(qi) = h.c_mean + k.dot(a_inv * r);
    out.variance(qi) = std::max(0.0, se(queries[q], queries[q], h) - k.dot(a_inv * k));
  }
  return out;
}

double dense_log_marginal_likelihood(std::span<const grf::TrainingSample> samples, const grf::Hyperparams& h) {
  const Eigen::MatrixXd a = noisy_gram(samples, h);
  const auto lu = a.fullPivLu();
  const Eigen::VectorXd r = residuals(samples, h);
  const double n = static_cast<double>(samples.size());
  return -0.5 * r.dot(lu.inverse() * r) - 0.5 * std::log(lu.determinant()) -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

RandomInstance random_instance(std::size_t n, std::size_t m, std::uint64_t seed, double extent) {
  Rng rng(seed);
  RandomInstance inst;
  inst.h.c_mean = rng.uniform(-90.0, -50.0);
  inst.h.sigma_e = rng.uniform(2.0, 15.0);
  inst.h.sigma_w = rng.uniform(1.0, 10.0);
  inst.h.sigma_n = rng.uniform(0.5, 3.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p(rng.uniform(0.0, extent), rng.uniform(0.0, extent));
    inst.samples.push_back({p, inst.h.c_mean + rng.normal() * inst.h.sigma_e});
  }
  for (std::size_t j = 0; j < m; ++j) inst.queries.emplace_back(rng.uniform(0.0, extent), rng.uniform(0.0, extent));
  return inst;
}

std::vector<grf::TrainingSample> draw_gp(std::span<const Vec2> positions, const grf::Hyperparams& h,
                                         std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(positions.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = se(positions[i], positions[j], h);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Rng rng(seed);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  const Eigen::VectorXd f = eig.eigenvectors() * root.asDiagonal() * z;
  std::vector<grf::TrainingSample> out;
  out.reserve(positions.size());
  for (Eigen::Index i = 0; i < n; ++i) out.push_back({positions[i], h.c_mean + f(i) + h.sigma_n * rng.normal()});
  return out;
}

CrossCheck cross_check(std::size_t n, std::size_t m, std::uint64_t seed) {
  const auto inst = random_instance(n, m, seed);
  const auto fast = grf::predict(inst.samples, inst.h, inst.queries);
  const auto ref = dense_predict(inst.samples, inst.h, inst.queries);
  CrossCheck c;
  c.max_mean_error = (fast.mean - ref.mean).cwiseAbs().maxCoeff();
  c.max_variance_error = (fast.variance - ref.variance).cwiseAbs().maxCoeff();
  c.lml_error = std::abs(grf::log_marginal_likelihood(inst.samples, inst.h) -
                         dense_log_marginal_likelihood(inst.samples, inst.h));
  return c;
}

}  // namespace rcamp::oracle
