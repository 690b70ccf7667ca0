#pragma once

// Reference GP computations by explicit matrix inverse and determinant.
// Deliberately shares no code with rcamp::grf beyond the sample struct, so it
// can serve as an independent check of the factorised implementation.

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "rcamp/grf.hpp"

namespace rcamp::oracle {

struct DensePrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

DensePrediction dense_predict(std::span<const grf::TrainingSample> samples, const grf::Hyperparams& h,
                              std::span<const Vec2> queries);

double dense_log_marginal_likelihood(std::span<const grf::TrainingSample> samples, const grf::Hyperparams& h);

/// Random window of n samples and m query points inside [0, extent]^2.
struct RandomInstance {
  std::vector<grf::TrainingSample> samples;
  std::vector<Vec2> queries;
  grf::Hyperparams h;
};

RandomInstance random_instance(std::size_t n, std::size_t m, std::uint64_t seed, double extent = 30.0);

/// Exact draw from a zero-mean-offset GP prior (C + f + noise) at the given
/// positions, via an eigen-decomposition of the prior covariance.
std::vector<grf::TrainingSample> draw_gp(std::span<const Vec2> positions, const grf::Hyperparams& h,
                                         std::uint64_t seed);

struct CrossCheck {
  double max_mean_error = 0.0;
  double max_variance_error = 0.0;
  double lml_error = 0.0;
};

/// Compares rcamp::grf against the dense reference on one random instance.
CrossCheck cross_check(std::size_t n, std::size_t m, std::uint64_t seed);

}  // namespace rcamp::oracle
