#include "rcamp/grf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace rcamp::grf {

void Hyperparams::validate() const {
  if (!(sigma_e > 0.0)) throw std::invalid_argument("sigma_e must be positive");
  if (!(sigma_w > 0.0)) throw std::invalid_argument("sigma_w must be positive");
  if (!(sigma_n > 0.0)) throw std::invalid_argument("sigma_n must be positive");
}

double kernel_eval(const Vec2& a, const Vec2& b, const Hyperparams& h) {
  return h.sigma_e * h.sigma_e * std::exp(-(a - b).squaredNorm() / (h.sigma_w * h.sigma_w));
}

// ---------------------------------------------------------------------------
// Training window

TrainingWindow::TrainingWindow(std::size_t min_size, std::size_t max_size)
    : min_size_(min_size), max_size_(max_size), cap_(min_size) {
  if (min_size == 0 || min_size > max_size) throw std::invalid_argument("need 0 < min_size <= max_size");
}

void TrainingWindow::evict() {
  if (samples_.size() > cap_) {
    samples_.erase(samples_.begin(), samples_.begin() + static_cast<std::ptrdiff_t>(samples_.size() - cap_));
  }
}

void TrainingWindow::set_current_cap(std::size_t cap) {
  cap_ = std::clamp(cap, min_size_, max_size_);
  evict();
}

TrainingWindow::IngestResult TrainingWindow::ingest(const TrainingSample& sample, bool connected) {
  IngestResult result;
  samples_.push_back(sample);
  if (connected) {
    cap_ = std::min(cap_ + 1, max_size_);
  } else {
    const std::size_t before = cap_;
    cap_ = std::max(cap_ - 1, min_size_);
    result.reoptimize = before > min_size_ && cap_ == min_size_;
  }
  evict();
  return result;
}

bool ready(const TrainingWindow& window, double displacement, double min_displacement) {
  return displacement >= min_displacement && window.size() >= window.min_size();
}

// ---------------------------------------------------------------------------
// Query lattice

QueryGrid QueryGrid::covering(const Rect& bounds, double resolution) {
  if (!(resolution > 0.0)) throw std::invalid_argument("query resolution must be positive");
  QueryGrid q;
  q.bounds = bounds;
  q.resolution = resolution;
  q.nx = std::max(1, static_cast<int>(std::ceil((bounds.x_max - bounds.x_min) / resolution - 1e-9)));
  q.ny = std::max(1, static_cast<int>(std::ceil((bounds.y_max - bounds.y_min) / resolution - 1e-9)));
  return q;
}

Vec2 QueryGrid::point(int ix, int iy) const {
  const double x = std::min(bounds.x_min + (ix + 0.5) * resolution, bounds.x_max);
  const double y = std::min(bounds.y_min + (iy + 0.5) * resolution, bounds.y_max);
  return {x, y};
}

std::vector<Vec2> QueryGrid::points() const {
  std::vector<Vec2> out;
  out.reserve(size());
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) out.push_back(point(ix, iy));
  }
  return out;
}

std::size_t QueryGrid::nearest(const Vec2& p) const {
  const int ix = std::clamp(static_cast<int>(std::floor((p.x() - bounds.x_min) / resolution)), 0, nx - 1);
  const int iy = std::clamp(static_cast<int>(std::floor((p.y() - bounds.y_min) / resolution)), 0, ny - 1);
  return static_cast<std::size_t>(iy) * nx + ix;
}

// ---------------------------------------------------------------------------
// Posterior

Posterior::Posterior(std::span<const TrainingSample> samples, const Hyperparams& h) : h_(h) {
  if (samples.empty()) throw UntrainedModel();
  h.validate();
  const auto n = static_cast<Eigen::Index>(samples.size());
  x_.resize(n, 2);
  residual_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x_.row(i) = samples[i].position.transpose();
    residual_(i) = samples[i].rss - h.c_mean;
  }

  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = h.sigma_e * h.sigma_e + h.sigma_n * h.sigma_n;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double k = kernel_eval(x_.row(i).transpose(), x_.row(j).transpose(), h);
      a(i, j) = k;
      a(j, i) = k;
    }
  }

  llt_.compute(a);
  for (double jitter = 1e-10; llt_.info() != Eigen::Success; jitter *= 10.0) {
    if (jitter > 1e-6 * (1.0 + 1e-9)) throw IllConditionedKernel();
    jitter_ = jitter;
    llt_.compute(a + Eigen::MatrixXd::Identity(n, n) * jitter);
  }
  weights_ = llt_.solve(residual_);
}

Prediction Posterior::predict(std::span<const Vec2> queries) const {
  const auto n = x_.rows();
  const auto m = static_cast<Eigen::Index>(queries.size());
  Eigen::MatrixXd k_star(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      k_star(i, j) = kernel_eval(x_.row(i).transpose(), queries[j], h_);
    }
  }

  Prediction out;
  const double prior_var = h_.sigma_e * h_.sigma_e;
  out.mean = (k_star.transpose() * weights_).array() + h_.c_mean;
  const Eigen::MatrixXd v = llt_.matrixL().solve(k_star);
  out.variance = (prior_var - v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0);
  out.confidence = 1.0 - (out.variance.array() / prior_var).cwiseMin(1.0);
  return out;
}

double Posterior::log_marginal_likelihood() const {
  const auto n = static_cast<double>(residual_.size());
  const double log_det_half = llt_.matrixLLT().diagonal().array().log().sum();
  return -0.5 * residual_.dot(weights_) - log_det_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Prediction predict(std::span<const TrainingSample> samples, const Hyperparams& h,
                   std::span<const Vec2> queries) {
  return Posterior(samples, h).predict(queries);
}

Prediction predict(std::span<const TrainingSample> samples, const Hyperparams& h, const QueryGrid& q) {
  const auto pts = q.points();
  return predict(samples, h, pts);
}

double log_marginal_likelihood(std::span<const TrainingSample> samples, const Hyperparams& h) {
  return Posterior(samples, h).log_marginal_likelihood();
}

// ---------------------------------------------------------------------------
// Hyperparameter search

namespace {

constexpr int kSweeps = 3;
constexpr double kInvPhi = 0.6180339887498949;

using Theta = std::array<double, 3>;  // C, log sigma_e, log sigma_w

Hyperparams to_hyper(const Theta& t, double sigma_n) {
  return {t[0], std::exp(t[1]), std::exp(t[2]), sigma_n};
}

// Golden-section maximisation of f on [lo, hi].
std::pair<double, double> golden_max(const std::function<double(double)>& f, double lo, double hi,
                                     double tol) {
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc > fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

OptimizeResult optimize_hyperparams(std::span<const TrainingSample> samples, const Hyperparams& h0,
                                    const HyperBounds& bounds) {
  auto lml_of = [&](const Theta& t) {
    try {
      const double v = log_marginal_likelihood(samples, to_hyper(t, h0.sigma_n));
      return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const IllConditionedKernel&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  OptimizeResult result;
  result.h = h0;
  result.lml_initial = log_marginal_likelihood(samples, h0);
  result.lml = result.lml_initial;

  const std::array<Range, 3> box{
      bounds.c_mean,
      Range{std::log(bounds.sigma_e.lo), std::log(bounds.sigma_e.hi)},
      Range{std::log(bounds.sigma_w.lo), std::log(bounds.sigma_w.hi)},
  };
  const std::array<double, 3> tol{1e-2, 1e-3, 1e-3};

  auto clamp_theta = [&](Theta t) {
    for (std::size_t i = 0; i < 3; ++i) t[i] = std::clamp(t[i], box[i].lo, box[i].hi);
    return t;
  };

  double mean_y = 0.0;
  for (const auto& s : samples) mean_y += s.rss;
  mean_y /= static_cast<double>(samples.size());
  double var_y = 0.0;
  for (const auto& s : samples) var_y += (s.rss - mean_y) * (s.rss - mean_y);
  var_y /= static_cast<double>(samples.size());

  const Theta start0{h0.c_mean, std::log(h0.sigma_e), std::log(h0.sigma_w)};
  const Theta start1{mean_y, std::log(std::max(std::sqrt(var_y), bounds.sigma_e.lo)),
                     std::log(h0.sigma_w) - std::numbers::ln2};

  for (const Theta& start : {start0, start1}) {
    Theta t = clamp_theta(start);
    double best = lml_of(t);
    for (int sweep = 0; sweep < kSweeps; ++sweep) {
      for (std::size_t i = 0; i < 3; ++i) {
        auto along = [&](double v) {
          Theta probe = t;
          probe[i] = v;
          return lml_of(probe);
        };
        const auto [arg, val] = golden_max(along, box[i].lo, box[i].hi, tol[i]);
        if (val > best) {
          best = val;
          t[i] = arg;
        }
      }
    }
    if (best > result.lml) {
      result.lml = best;
      result.h = to_hyper(t, h0.sigma_n);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Online mapper

GrfMapper::GrfMapper(Config cfg)
    : cfg_(std::move(cfg)), window_(cfg_.min_size, cfg_.max_size), h_(cfg_.initial) {
  h_.validate();
}

bool GrfMapper::ready() const { return grf::ready(window_, displacement_, cfg_.min_displacement); }

void GrfMapper::reoptimize() {
  if (window_.size() < window_.min_size()) return;
  h_ = optimize_hyperparams(window_.samples(), h_, cfg_.bounds).h;
  since_reopt_ = 0;
}

GrfMapper::IngestReport GrfMapper::ingest(const TrainingSample& sample, bool connected, double moved) {
  IngestReport report;
  displacement_ += moved;
  const auto r = window_.ingest(sample, connected);
  cache_.reset();
  if (connected) ++since_reopt_;

  const bool now_ready = ready();
  if (now_ready && !was_ready_) {
    report.became_ready = true;
    report.reoptimized = true;
  } else if (now_ready && (r.reoptimize || (cfg_.reoptimize_every > 0 && since_reopt_ >= cfg_.reoptimize_every))) {
    report.reoptimized = true;
  }
  was_ready_ = now_ready;
  if (report.reoptimized) reoptimize();
  return report;
}

const Posterior& GrfMapper::posterior() const {
  if (!cache_) cache_.emplace(window_.samples(), h_);
  return *cache_;
}

}  // namespace rcamp::grf
