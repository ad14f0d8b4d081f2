#include "dpm/coincidence_map.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dpm/errors.hpp"

namespace dpm {

int MapGeometry::bins_per_axis() const { return static_cast<int>(std::ceil(axis_range_ps / bin_width_ps - 1e-9)); }

void MapGeometry::validate() const {
  if (!(bin_width_ps > 0.0)) throw ConfigError("histogram.bin_width_ps", "must be positive");
  if (!(axis_range_ps >= bin_width_ps)) throw ConfigError("histogram.axis_range_ps", "must be at least one bin wide");
  if (bins_per_axis() > 8192) throw ConfigError("histogram.axis_range_ps", "more than 8192 bins per axis");
}

CoincidenceMap::CoincidenceMap(ProjectionSetting setting, MapGeometry geometry, std::uint64_t total_pulses,
                               std::uint64_t seed)
    : setting_(setting), geometry_(geometry), total_pulses_(total_pulses), seed_(seed) {
  geometry_.validate();
  bins_ = geometry_.bins_per_axis();
  counts_.assign(static_cast<std::size_t>(bins_) * bins_, 0);
}

void CoincidenceMap::add(double t_xx_ps, double t_x_ps) {
  const double w = geometry_.bin_width_ps;
  if (t_xx_ps < 0.0 || t_x_ps < 0.0) {
    ++overflow_;
    return;
  }
  const auto i = static_cast<std::int64_t>(t_xx_ps / w);
  const auto j = static_cast<std::int64_t>(t_x_ps / w);
  if (i >= bins_ || j >= bins_) {
    ++overflow_;
    return;
  }
  ++counts_[static_cast<std::size_t>(i) * bins_ + j];
}

void CoincidenceMap::merge(const CoincidenceMap& other) {
  if (!(other.setting_ == setting_) || other.bins_ != bins_ || other.geometry_.bin_width_ps != geometry_.bin_width_ps)
    throw std::invalid_argument("cannot merge coincidence maps with different setting or geometry");
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  overflow_ += other.overflow_;
}

std::uint64_t CoincidenceMap::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

void write_coincidence_csv(std::ostream& os, const CoincidenceMap& map) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "# setting=" << map.setting().label() << '\n';
  os << "# bin_width_ps=" << map.bin_width_ps() << '\n';
  os << "# axis_range_ps=" << map.geometry().axis_range_ps << '\n';
  os << "# pulses=" << map.total_pulses() << '\n';
  os << "# seed=" << map.seed() << '\n';
  os << "# overflow=" << map.overflow() << '\n';
  os << "bin_t_xx_ps,bin_t_x_ps,count\n";
  const double w = map.bin_width_ps();
  for (int i = 0; i < map.bins(); ++i)
    for (int j = 0; j < map.bins(); ++j)
      if (const auto c = map.at(i, j); c != 0) os << i * w << ',' << j * w << ',' << c << '\n';
  os.flags(flags);
  os.precision(prec);
}

namespace {

template <typename T>
T parse_number(const std::string& text, const std::string& source, int line, const std::string& what) {
  std::istringstream ss(text);
  T value{};
  if (!(ss >> value) || !(ss >> std::ws).eof()) throw ParseError(source, line, "invalid " + what + " '" + text + "'");
  return value;
}

}  // namespace

CoincidenceMap read_coincidence_csv(std::istream& is, const std::string& source) {
  std::string line;
  int lineno = 0;
  std::string setting;
  MapGeometry geom;
  std::uint64_t pulses = 0, seed = 0, overflow = 0;
  bool have_setting = false, have_width = false, have_pulses = false;

  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] != '#') break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "header line without '='");
    std::string key = line.substr(1, eq - 1);
    key.erase(0, key.find_first_not_of(' '));
    const std::string value = line.substr(eq + 1);
    if (key == "setting") {
      setting = value;
      have_setting = true;
    } else if (key == "bin_width_ps") {
      geom.bin_width_ps = parse_number<double>(value, source, lineno, "bin width");
      have_width = true;
    } else if (key == "axis_range_ps") {
      geom.axis_range_ps = parse_number<double>(value, source, lineno, "axis range");
    } else if (key == "pulses") {
      pulses = parse_number<std::uint64_t>(value, source, lineno, "pulse count");
      have_pulses = true;
    } else if (key == "seed") {
      seed = parse_number<std::uint64_t>(value, source, lineno, "seed");
    } else if (key == "overflow") {
      overflow = parse_number<std::uint64_t>(value, source, lineno, "overflow count");
    }
  }
  if (!have_setting || !have_width || !have_pulses)
    throw ParseError(source, lineno, "missing setting, bin_width_ps or pulses header");
  if (line != "bin_t_xx_ps,bin_t_x_ps,count") throw ParseError(source, lineno, "expected column header line");

  CoincidenceMap map;
  try {
    map = CoincidenceMap(ProjectionSetting::from_label(setting), geom, pulses, seed);
  } catch (const std::exception& e) {
    throw ParseError(source, lineno, e.what());
  }
  map.add_overflow(overflow);
  const double w = geom.bin_width_ps;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c) || c.find(',') != std::string::npos)
      throw ParseError(source, lineno, "expected three comma-separated fields");
    const double txx = parse_number<double>(a, source, lineno, "bin_t_xx_ps");
    const double tx = parse_number<double>(b, source, lineno, "bin_t_x_ps");
    const auto count = parse_number<std::uint64_t>(c, source, lineno, "count");
    const long i = std::lround(txx / w), j = std::lround(tx / w);
    if (i < 0 || j < 0 || i >= map.bins() || j >= map.bins() || std::abs(i * w - txx) > 1e-6 * w ||
        std::abs(j * w - tx) > 1e-6 * w)
      throw ParseError(source, lineno, "bin coordinate off the histogram grid");
    map.at(static_cast<int>(i), static_cast<int>(j)) += count;
  }
  return map;
}

}  // namespace dpm
