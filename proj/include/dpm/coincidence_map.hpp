#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpm/qstate.hpp"

namespace dpm {

struct MapGeometry {
  double bin_width_ps = 16.0;
  double axis_range_ps = 4096.0;

  int bins_per_axis() const;
  void validate() const;

  friend bool operator==(const MapGeometry&, const MapGeometry&) = default;
};

/// 2D histogram of (t_xx, t_x) detection times for one projection setting.
/// Bins are [k·w, (k+1)·w) on both axes; times outside [0, axis_range) go to
/// the overflow counter.
class CoincidenceMap {
 public:
  CoincidenceMap() = default;
  CoincidenceMap(ProjectionSetting setting, MapGeometry geometry, std::uint64_t total_pulses = 0,
                 std::uint64_t seed = 0);

  const ProjectionSetting& setting() const { return setting_; }
  const MapGeometry& geometry() const { return geometry_; }
  double bin_width_ps() const { return geometry_.bin_width_ps; }
  int bins() const { return bins_; }
  std::uint64_t total_pulses() const { return total_pulses_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t overflow() const { return overflow_; }

  std::uint64_t at(int i_xx, int i_x) const { return counts_[static_cast<std::size_t>(i_xx) * bins_ + i_x]; }
  std::uint64_t& at(int i_xx, int i_x) { return counts_[static_cast<std::size_t>(i_xx) * bins_ + i_x]; }
  void add(double t_xx_ps, double t_x_ps);
  void add_overflow(std::uint64_t n) { overflow_ += n; }
  /// Commutative merge; geometry and setting must match.
  void merge(const CoincidenceMap& other);

  /// Sum over all in-range bins.
  std::uint64_t total() const;

  friend bool operator==(const CoincidenceMap&, const CoincidenceMap&) = default;

 private:
  ProjectionSetting setting_;
  MapGeometry geometry_;
  int bins_ = 0;
  std::uint64_t total_pulses_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t overflow_ = 0;
  std::vector<std::uint64_t> counts_;
};

/// CSV: '#'-prefixed header lines (setting, bin width, axis range, pulses,
/// seed, overflow), a column line, then "bin_t_xx_ps,bin_t_x_ps,count" rows
/// for non-zero bins. Bin coordinates are lower bin edges.
void write_coincidence_csv(std::ostream& os, const CoincidenceMap& map);
/// `source` is used in ParseError messages.
CoincidenceMap read_coincidence_csv(std::istream& is, const std::string& source);

}  // namespace dpm
