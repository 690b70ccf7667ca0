#include "rcamp/radio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcamp/rng.hpp"

namespace rcamp::radio {

void PropagationParams::validate() const {
  if (!(d0 > 0.0)) throw std::invalid_argument("d0 must be positive");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (!(sigma_shadow >= 0.0)) throw std::invalid_argument("sigma_shadow must be non-negative");
  if (!(nakagami_m >= 0.5)) throw std::invalid_argument("nakagami_m must be >= 0.5");
  if (!(shadow_corr_len > 0.0)) throw std::invalid_argument("shadow_corr_len must be positive");
}

std::optional<double> deterministic_rss(const AccessPoint& ap, const Vec2& pos) {
  if (!ap.active) return std::nullopt;
  const auto& p = ap.params;
  const double d = std::max(distance(pos, ap.position), p.d0);
  return p.rss_d0 - 10.0 * p.eta * std::log10(d / p.d0);
}

ShadowField::ShadowField(std::uint64_t seed, double corr_len, double sigma)
    : seed_(seed), corr_len_(corr_len), sigma_(sigma) {}

double ShadowField::lattice(std::int64_t i, std::int64_t j) const {
  const std::uint64_t h = hash_combine(hash_combine(seed_, static_cast<std::uint64_t>(i)),
                                       static_cast<std::uint64_t>(j));
  const double u1 = bits_to_open_unit(splitmix64(h));
  const double u2 = bits_to_open_unit(splitmix64(h ^ 0x5bd1e995ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double ShadowField::operator()(const Vec2& pos) const {
  if (sigma_ == 0.0) return 0.0;
  const double gx = pos.x() / corr_len_;
  const double gy = pos.y() / corr_len_;
  const double fx = std::floor(gx);
  const double fy = std::floor(gy);
  const auto i = static_cast<std::int64_t>(fx);
  const auto j = static_cast<std::int64_t>(fy);
  const double tx = gx - fx;
  const double ty = gy - fy;
  const double w00 = (1 - tx) * (1 - ty);
  const double w10 = tx * (1 - ty);
  const double w01 = (1 - tx) * ty;
  const double w11 = tx * ty;
  const double v = w00 * lattice(i, j) + w10 * lattice(i + 1, j) + w01 * lattice(i, j + 1) +
                   w11 * lattice(i + 1, j + 1);
  const double norm = std::sqrt(w00 * w00 + w10 * w10 + w01 * w01 + w11 * w11);
  return sigma_ * v / norm;
}

double shadowing_db(const AccessPoint& ap, const Vec2& pos, std::uint64_t seed) {
  const ShadowField field(hash_combine(seed, hash_string(ap.id)), ap.params.shadow_corr_len,
                          ap.params.sigma_shadow);
  return field(pos);
}

double multipath_db(const AccessPoint& ap, std::uint64_t seed, std::uint64_t call_index) {
  const auto& p = ap.params;
  if (!p.multipath || !std::isfinite(p.nakagami_m)) return 0.0;
  Rng rng(hash_combine(hash_combine(seed ^ 0xa5a5a5a5ULL, hash_string(ap.id)), call_index));
  // Unit-mean Nakagami-m power.
  const double power = rng.gamma(p.nakagami_m, 1.0 / p.nakagami_m);
  return -10.0 * std::log10(power);
}

std::optional<double> sample_rss(const AccessPoint& ap, const Vec2& pos, std::uint64_t seed,
                                 std::uint64_t call_index) {
  auto base = deterministic_rss(ap, pos);
  if (!base) return std::nullopt;
  return *base - shadowing_db(ap, pos, seed) - multipath_db(ap, seed, call_index);
}

double ewma_update(EwmaState& state, double raw) {
  if (!state.value) {
    state.value = raw;
  } else {
    state.value = *state.value + state.alpha * (raw - *state.value);
  }
  return *state.value;
}

Association associate(std::span<const ApReading> readings, const std::optional<std::string>& current,
                      double threshold) {
  if (current) {
    for (const auto& r : readings) {
      if (r.id == *current && r.active && r.rss && *r.rss >= threshold) return {r.id, r.rss};
    }
  }
  const ApReading* best = nullptr;
  for (const auto& r : readings) {
    if (!r.active || !r.rss || *r.rss < threshold) continue;
    if (best == nullptr || *r.rss > *best->rss) best = &r;
  }
  if (best == nullptr) return {};
  return {best->id, best->rss};
}

Association associate(std::span<const AccessPoint> aps, const Vec2& pos,
                      const std::optional<std::string>& current, double threshold, std::uint64_t seed,
                      std::uint64_t call_index) {
  std::vector<ApReading> readings;
  readings.reserve(aps.size());
  for (const auto& ap : aps) {
    readings.push_back({ap.id, ap.active, sample_rss(ap, pos, seed, call_index)});
  }
  return associate(readings, current, threshold);
}

}  // namespace rcamp::radio
