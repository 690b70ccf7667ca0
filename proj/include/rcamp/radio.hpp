#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcamp/geometry.hpp"

namespace rcamp::radio {

/// Log-distance path loss with correlated shadowing and Nakagami-m multipath.
struct PropagationParams {
  double rss_d0 = -40.0;          // dBm at d0
  double d0 = 1.0;                // m
  double eta = 3.0;               // path-loss exponent
  double sigma_shadow = 2.0;      // dB
  double nakagami_m = 2.0;        // shape, >= 0.5
  bool multipath = true;          // false disables the fading term
  double shadow_corr_len = 5.0;   // m, lattice spacing of the shadow field

  void validate() const;
};

struct AccessPoint {
  std::string id;
  Vec2 position = Vec2::Zero();
  PropagationParams params;
  bool active = true;
  double range = 25.0;  // m, nominal operative radius
};

struct RssSample {
  Vec2 position = Vec2::Zero();
  double rss = 0.0;      // filtered dBm
  double raw_rss = 0.0;  // dBm
  std::optional<std::string> ap_id;
  double timestamp = 0.0;
};

/// Path-loss term only. std::nullopt means "no signal" (AP switched off).
std::optional<double> deterministic_rss(const AccessPoint& ap, const Vec2& pos);

/// Seeded shadowing field: Gaussian lattice values bilinearly interpolated and
/// renormalised so that every point has standard deviation sigma exactly.
class ShadowField {
 public:
  ShadowField(std::uint64_t seed, double corr_len, double sigma);

  double operator()(const Vec2& pos) const;

 private:
  double lattice(std::int64_t i, std::int64_t j) const;

  std::uint64_t seed_;
  double corr_len_;
  double sigma_;
};

/// Shadowing draw Psi(pos) for one AP under a world seed.
double shadowing_db(const AccessPoint& ap, const Vec2& pos, std::uint64_t seed);

/// Multipath draw Omega in dB; repeatable per (seed, ap, call_index).
double multipath_db(const AccessPoint& ap, std::uint64_t seed, std::uint64_t call_index);

/// Full received power: path loss - Psi - Omega.
std::optional<double> sample_rss(const AccessPoint& ap, const Vec2& pos, std::uint64_t seed,
                                 std::uint64_t call_index = 0);

struct EwmaState {
  double alpha = 0.3;
  std::optional<double> value;
};

/// In-place update; an empty state takes the raw value.
double ewma_update(EwmaState& state, double raw);

/// One per-AP reading at the robot position.
struct ApReading {
  std::string id;
  bool active = false;
  std::optional<double> rss;
};

struct Association {
  std::optional<std::string> ap_id;
  std::optional<double> rss;
};

/// Sticky roaming: keep `current` while it is active and above threshold,
/// otherwise pick the strongest active reading that clears the threshold.
Association associate(std::span<const ApReading> readings, const std::optional<std::string>& current,
                      double threshold);

/// Convenience overload that samples every AP at `pos`.
Association associate(std::span<const AccessPoint> aps, const Vec2& pos,
                      const std::optional<std::string>& current, double threshold, std::uint64_t seed,
                      std::uint64_t call_index = 0);

}  // namespace rcamp::radio
