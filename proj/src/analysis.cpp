#include "dpm/analysis.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dpm {

WindowedCounts window_counts(const CoincidenceMap& map, const TimeWindow& w) {
  if (!(w.width_ps > 0.0)) throw std::invalid_argument("window width must be positive");
  if (w.origin_ps < 0.0 || w.origin_ps >= map.geometry().axis_range_ps)
    throw std::invalid_argument("window origin outside the histogram axis");
  const double bw = map.bin_width_ps();
  const double hi = w.origin_ps + w.width_ps;
  // Bin k is included iff origin ≤ (k + 1/2)·bw < origin + width.
  const int first = std::max(0, static_cast<int>(std::ceil(w.origin_ps / bw - 0.5)));
  int last = static_cast<int>(std::ceil(hi / bw - 0.5)) - 1;
  if (last >= map.bins()) {
    if (hi > map.geometry().axis_range_ps + 1e-9) throw std::invalid_argument("window extends beyond the histogram axis");
    last = map.bins() - 1;
  }
  if (last < first) throw std::invalid_argument("window narrower than one bin");
  WindowedCounts out;
  out.first_bin = first;
  out.last_bin = last;
  out.effective_origin_ps = first * bw;
  out.effective_width_ps = (last - first + 1) * bw;
  for (int i = first; i <= last; ++i)
    for (int j = first; j <= last; ++j) out.total += map.at(i, j);
  return out;
}

CoincidenceMap window_submap(const CoincidenceMap& map, const TimeWindow& w) {
  const WindowedCounts wc = window_counts(map, w);
  CoincidenceMap out(map.setting(), map.geometry(), map.total_pulses(), map.seed());
  for (int i = wc.first_bin; i <= wc.last_bin; ++i)
    for (int j = wc.first_bin; j <= wc.last_bin; ++j) out.at(i, j) = map.at(i, j);
  return out;
}

std::uint64_t DeltaTProfile::total() const {
  std::uint64_t t = negative_counts;
  for (auto c : counts) t += c;
  return t;
}

DeltaTProfile diagonal_profile(const CoincidenceMap& map) {
  DeltaTProfile p;
  p.setting = map.setting();
  p.bin_width_ps = map.bin_width_ps();
  p.counts.assign(static_cast<std::size_t>(map.bins()), 0);
  for (int i = 0; i < map.bins(); ++i)
    for (int j = 0; j < map.bins(); ++j) {
      const std::uint64_t c = map.at(i, j);
      if (j >= i)
        p.counts[static_cast<std::size_t>(j - i)] += c;
      else
        p.negative_counts += c;
    }
  return p;
}

std::vector<CountRecord> windowed_records(std::span<const CoincidenceMap> maps, const TimeWindow& w) {
  std::vector<CountRecord> rec;
  rec.reserve(maps.size());
  for (const CoincidenceMap& m : maps)
    rec.push_back({m.setting(), window_counts(m, w).total, static_cast<double>(m.total_pulses())});
  return rec;
}

NegativityCurve negativity_vs_window(std::span<const CoincidenceMap> maps, std::span<const TimeWindow> windows,
                                     const SweepOptions& options, bool dpm) {
  if (windows.empty()) throw std::invalid_argument("negativity_vs_window: empty window list");
  if (options.bootstrap_resamples != 0 && options.bootstrap_resamples < 100)
    throw std::invalid_argument("negativity_vs_window: bootstrap needs at least 100 resamples");
  // Validates the setting set once up front.
  (void)canonical_records(windowed_records(maps, windows.front()));

  NegativityCurve curve;
  curve.dpm = dpm;
  curve.points.resize(windows.size());
  const auto n = static_cast<std::int64_t>(windows.size());
  std::vector<std::string> errors(windows.size());

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < n; ++k) {
    CurvePoint& pt = curve.points[k];
    try {
      const TimeWindow& w = windows[k];
      pt.t_w_ps = w.width_ps;
      const std::vector<CountRecord> rec = windowed_records(maps, w);
      pt.effective_width_ps = window_counts(maps.front(), w).effective_width_ps;
      for (const CountRecord& r : rec) pt.total_counts += r.count;
      pt.low_statistics = pt.total_counts < 100;
      if (pt.total_counts == 0) continue;
      const TomographyResult res = mle_reconstruct(rec, options.mle);
      pt.negativity = negativity(res.rho);
      pt.converged = res.converged;
      if (options.bootstrap_resamples > 0)
        pt.uncertainty =
            bootstrap_uncertainties(rec, options.bootstrap_resamples, options.mle, options.bootstrap_seed + k)
                .negativity_std;
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const std::string& e : errors)
    if (!e.empty()) throw std::invalid_argument(e);
  return curve;
}

void write_profile_csv(std::ostream& os, const DeltaTProfile& profile, bool dpm, std::uint64_t seed) {
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "# setting=" << profile.setting.label() << '\n';
  os << "# bin_width_ps=" << profile.bin_width_ps << '\n';
  os << "# dpm=" << (dpm ? 1 : 0) << '\n';
  os << "# seed=" << seed << '\n';
  os << "# negative_counts=" << profile.negative_counts << '\n';
  os << "delta_t_ps,count\n";
  for (std::size_t k = 0; k < profile.counts.size(); ++k)
    os << profile.center_ps(static_cast<int>(k)) << ',' << profile.counts[k] << '\n';
  os.precision(prec);
}

void write_curve_csv(std::ostream& os, const NegativityCurve& curve, std::uint64_t seed,
                     const std::string& origin_mode) {
  const auto prec = os.precision();
  os << std::setprecision(12);
  os << "# dpm=" << (curve.dpm ? 1 : 0) << '\n';
  os << "# seed=" << seed << '\n';
  os << "# window_origin_mode=" << origin_mode << '\n';
  os << "t_w_ps,effective_width_ps,negativity,uncertainty,total_counts,low_statistics,converged\n";
  for (const CurvePoint& p : curve.points)
    os << p.t_w_ps << ',' << p.effective_width_ps << ',' << p.negativity << ',' << p.uncertainty << ','
       << p.total_counts << ',' << (p.low_statistics ? 1 : 0) << ',' << (p.converged ? 1 : 0) << '\n';
  os.precision(prec);
}

}  // namespace dpm
