#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcamp/geometry.hpp"

namespace rcamp::grf {

struct Hyperparams {
  double c_mean = -70.0;  // constant prior mean, dBm
  double sigma_e = 10.0;  // kernel amplitude, dB
  double sigma_w = 5.0;   // length scale, m
  double sigma_n = 2.0;   // observation noise, dB (held fixed)

  void validate() const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct HyperBounds {
  Range c_mean{-120.0, -20.0};
  Range sigma_e{0.5, 50.0};
  Range sigma_w{0.5, 50.0};
};

struct TrainingSample {
  Vec2 position = Vec2::Zero();
  double rss = 0.0;
};

class UntrainedModel : public std::runtime_error {
 public:
  UntrainedModel() : std::runtime_error("untrained model") {}
};

class IllConditionedKernel : public std::runtime_error {
 public:
  IllConditionedKernel() : std::runtime_error("ill-conditioned kernel") {}
};

/// Squared exponential: sigma_e^2 * exp(-|a-b|^2 / sigma_w^2).
double kernel_eval(const Vec2& a, const Vec2& b, const Hyperparams& h);

/// FIFO training set whose capacity breathes with the connection status.
class TrainingWindow {
 public:
  TrainingWindow(std::size_t min_size = 10, std::size_t max_size = 200);

  struct IngestResult {
    bool reoptimize = false;  // capacity just fell to min_size
  };

  IngestResult ingest(const TrainingSample& sample, bool connected);

  std::span<const TrainingSample> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t min_size() const { return min_size_; }
  std::size_t max_size() const { return max_size_; }
  std::size_t current_cap() const { return cap_; }

  /// Test hook; clamps into [min_size, max_size].
  void set_current_cap(std::size_t cap);

 private:
  void evict();

  std::vector<TrainingSample> samples_;
  std::size_t min_size_;
  std::size_t max_size_;
  std::size_t cap_;
};

/// True once the robot has travelled far enough and the window holds min_size samples.
bool ready(const TrainingWindow& window, double displacement, double min_displacement = 5.0);

/// Regular lattice of query points covering `bounds` at cell centres.
struct QueryGrid {
  Rect bounds;
  double resolution = 1.0;
  int nx = 0;
  int ny = 0;

  static QueryGrid covering(const Rect& bounds, double resolution);

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  Vec2 point(int ix, int iy) const;
  Vec2 point(std::size_t k) const { return point(static_cast<int>(k % nx), static_cast<int>(k / nx)); }
  std::vector<Vec2> points() const;
  /// Index of the lattice point nearest to `p` (clamped to the grid).
  std::size_t nearest(const Vec2& p) const;
};

struct Prediction {
  Eigen::VectorXd mean;        // dBm
  Eigen::VectorXd variance;    // dB^2, clamped at zero
  Eigen::VectorXd confidence;  // 1 - min(1, variance / sigma_e^2)
};

/// Cholesky factor of K + sigma_n^2 I together with the weight vector
/// (K + sigma_n^2 I)^-1 (y - C). Built once per (window, hyperparameters).
class Posterior {
 public:
  Posterior(std::span<const TrainingSample> samples, const Hyperparams& h);

  Prediction predict(std::span<const Vec2> queries) const;
  double log_marginal_likelihood() const;

  const Hyperparams& hyperparams() const { return h_; }
  double jitter() const { return jitter_; }

 private:
  Hyperparams h_;
  Eigen::MatrixX2d x_;
  Eigen::VectorXd residual_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd weights_;
  double jitter_ = 0.0;
};

Prediction predict(std::span<const TrainingSample> samples, const Hyperparams& h,
                   std::span<const Vec2> queries);
Prediction predict(std::span<const TrainingSample> samples, const Hyperparams& h, const QueryGrid& q);

double log_marginal_likelihood(std::span<const TrainingSample> samples, const Hyperparams& h);

struct OptimizeResult {
  Hyperparams h;
  double lml = 0.0;
  double lml_initial = 0.0;
};

/// Coordinate-wise golden-section ascent of the LML over (C, log sigma_e,
/// log sigma_w), two starts, three sweeps each. Never returns worse than h0.
OptimizeResult optimize_hyperparams(std::span<const TrainingSample> samples, const Hyperparams& h0,
                                    const HyperBounds& bounds);

/// Online map generator: window policy, periodic re-optimisation and a cached posterior.
class GrfMapper {
 public:
  struct Config {
    std::size_t min_size = 10;
    std::size_t max_size = 200;
    std::size_t reoptimize_every = 25;  // connected ingests between periodic re-fits
    double min_displacement = 5.0;      // m
    Hyperparams initial;
    HyperBounds bounds;
  };

  explicit GrfMapper(Config cfg);

  struct IngestReport {
    bool became_ready = false;
    bool reoptimized = false;
  };

  IngestReport ingest(const TrainingSample& sample, bool connected, double moved);

  bool ready() const;
  const TrainingWindow& window() const { return window_; }
  const Hyperparams& hyperparams() const { return h_; }
  double displacement() const { return displacement_; }
  const Config& config() const { return cfg_; }

  /// Posterior for the current window. Throws UntrainedModel when empty.
  const Posterior& posterior() const;
  Prediction predict(const QueryGrid& q) const { return posterior().predict(q.points()); }

 private:
  void reoptimize();

  Config cfg_;
  TrainingWindow window_;
  Hyperparams h_;
  double displacement_ = 0.0;
  std::size_t since_reopt_ = 0;
  bool was_ready_ = false;
  mutable std::optional<Posterior> cache_;
};

}  // namespace rcamp::grf
