#include "dpm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "dpm/errors.hpp"

namespace dpm {

using nlohmann::json;

namespace {

/// Reads members of one JSON object, remembering which keys were consumed
/// so leftovers can be reported with their full path.
class Section {
 public:
  Section(const json& parent, const std::string& key, const std::string& path)
      : path_(path.empty() ? key : path + "." + key) {
    if (!parent.contains(key)) {
      obj_ = &empty_;
      return;
    }
    obj_ = &parent.at(key);
    if (!obj_->is_object()) throw ConfigError(path_, "must be an object");
  }
  Section(const json& root) : path_(""), obj_(&root) {
    if (!root.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  }

  const std::string& path() const { return path_; }
  const json& raw() const { return *obj_; }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return obj_->contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!obj_->contains(key)) return;
    used_.insert(key);
    const json& v = obj_->at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(field(key), "must be a number");
        out = v.get<double>();
        if (!std::isfinite(out)) throw ConfigError(field(key), "must be finite");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(field(key), "must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0)
            out = v.get<T>();
          else
            throw ConfigError(field(key), "must be non-negative");
        } else {
          out = v.get<T>();
        }
      } else {
        out = v.get<T>();
      }
    } catch (const json::exception& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  void mark(const std::string& key) { used_.insert(key); }

  void reject_unknown() const {
    for (auto it = obj_->begin(); it != obj_->end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  static inline const json empty_ = json::object();
  std::string path_;
  const json* obj_;
  std::set<std::string> used_;
};

WaveformMode waveform_mode_from(const std::string& s) {
  if (s == "none") return WaveformMode::none;
  if (s == "ideal") return WaveformMode::ideal;
  if (s == "paper-like") return WaveformMode::paper_like;
  if (s == "explicit") return WaveformMode::explicit_segments;
  throw ConfigError("waveform.mode", "expected one of none, ideal, paper-like, explicit; got '" + s + "'");
}

SlotSelection slots_from(const std::string& s) {
  if (s == "all") return SlotSelection::all;
  if (s == "reference") return SlotSelection::reference;
  if (s == "modulated") return SlotSelection::modulated;
  throw ConfigError("simulation.slots", "expected one of all, reference, modulated; got '" + s + "'");
}

MleInit mle_init_from(const std::string& s) {
  if (s == "linear_inversion") return MleInit::linear_inversion;
  if (s == "maximally_mixed") return MleInit::maximally_mixed;
  throw ConfigError("mle.init", "expected linear_inversion or maximally_mixed; got '" + s + "'");
}

bool same_imperfections(const ImperfectionModel& a, const ImperfectionModel& b) {
  return a.slope_error == b.slope_error && a.extinction_epsilon == b.extinction_epsilon &&
         a.drift_sigma_rad == b.drift_sigma_rad && a.detector_jitter_sigma_ps == b.detector_jitter_sigma_ps &&
         a.dark_count_fraction == b.dark_count_fraction;
}

}  // namespace

std::string to_string(WaveformMode m) {
  switch (m) {
    case WaveformMode::none: return "none";
    case WaveformMode::ideal: return "ideal";
    case WaveformMode::paper_like: return "paper-like";
    case WaveformMode::explicit_segments: return "explicit";
  }
  return "none";
}

std::string to_string(SlotSelection s) {
  switch (s) {
    case SlotSelection::all: return "all";
    case SlotSelection::reference: return "reference";
    case SlotSelection::modulated: return "modulated";
  }
  return "modulated";
}

std::vector<TimeWindow> RunConfig::windows() const {
  std::vector<TimeWindow> out;
  out.reserve(windows_ps.size());
  for (double w : windows_ps) out.push_back({w, window_origin_ps});
  return out;
}

void RunConfig::validate() const {
  if (!seed) throw ConfigError("seed", "is mandatory (no wall-clock default)");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  emitter.validate();
  setup.validate();
  imperfections.validate();
  histogram.validate();
  mle.validate();
  if (pulses_per_setting == 0) throw ConfigError("simulation.pulses_per_setting", "must be positive");
  if (bootstrap_resamples != 0 && bootstrap_resamples < 100)
    throw ConfigError("analysis.bootstrap_resamples", "must be 0 (off) or at least 100");
  if (window_origin_ps < 0.0 || window_origin_ps >= histogram.axis_range_ps)
    throw ConfigError("analysis.window_origin_ps", "must lie inside the histogram axis");
  for (std::size_t i = 0; i < windows_ps.size(); ++i) {
    const std::string f = "analysis.windows_ps[" + std::to_string(i) + "]";
    if (!(windows_ps[i] > 0.0)) throw ConfigError(f, "must be positive");
    if (windows_ps[i] < 0.5 * histogram.bin_width_ps) throw ConfigError(f, "narrower than half a histogram bin");
    if (window_origin_ps + windows_ps[i] > histogram.axis_range_ps + 1e-9)
      throw ConfigError(f, "extends beyond histogram.axis_range_ps");
  }
  if (imperfection_preset != "none" && imperfection_preset != kPaperLikePreset && imperfection_preset != "custom")
    throw ConfigError("imperfections.preset", std::string("expected none, ") + kPaperLikePreset + " or custom");
  if (waveform.mode == WaveformMode::explicit_segments && waveform.segments.empty())
    throw ConfigError("waveform.segments", "explicit mode needs at least one segment");
  try {
    (void)simulation_spec(*this);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("waveform", e.what());
  }
}

RunConfig config_from_json(const json& input) {
  const json& j = input.is_object() && input.contains("config") ? input.at("config") : input;
  RunConfig c;
  Section root(j);

  if (root.has("seed")) {
    std::uint64_t s = 0;
    root.get("seed", s);
    c.seed = s;
  }
  root.get("output_dir", c.output_dir);

  Section em(j, "emitter", "");
  em.get("tau_xx_ps", c.emitter.tau_xx_ps);
  em.get("tau_x_ps", c.emitter.tau_x_ps);
  em.get("fss_microev", c.emitter.fss_microev);
  em.reject_unknown();
  root.mark("emitter");

  Section su(j, "setup", "");
  su.get("delay_line_ps", c.setup.delay_line_ps);
  su.get("clock_period_ps", c.setup.clock_period_ps);
  su.get("pulses_per_cycle", c.setup.pulses_per_cycle);
  su.get("dpm_arm_offset_ps", c.setup.dpm_arm_offset_ps);
  su.reject_unknown();
  root.mark("setup");

  Section im(j, "imperfections", "");
  im.get("preset", c.imperfection_preset);
  if (c.imperfection_preset == kPaperLikePreset) c.imperfections = ImperfectionModel::paper_like();
  else if (c.imperfection_preset != "none" && c.imperfection_preset != "custom")
    throw ConfigError("imperfections.preset", std::string("expected none, ") + kPaperLikePreset + " or custom");
  const ImperfectionModel preset_values = c.imperfections;
  im.get("slope_error", c.imperfections.slope_error);
  im.get("extinction_epsilon", c.imperfections.extinction_epsilon);
  im.get("drift_sigma_rad", c.imperfections.drift_sigma_rad);
  im.get("detector_jitter_sigma_ps", c.imperfections.detector_jitter_sigma_ps);
  im.get("dark_count_fraction", c.imperfections.dark_count_fraction);
  im.reject_unknown();
  root.mark("imperfections");
  // Any override of preset values makes the model a custom one.
  if (c.imperfection_preset != "custom" && !same_imperfections(preset_values, c.imperfections))
    c.imperfection_preset = "custom";

  Section wf(j, "waveform", "");
  std::string mode = "none";
  wf.get("mode", mode);
  c.waveform.mode = waveform_mode_from(mode);
  wf.get("period_ps", c.waveform.period_ps);
  if (wf.has("range_limit_rad")) {
    double r = 0;
    wf.get("range_limit_rad", r);
    c.waveform.range_limit_rad = r;
  }
  if (wf.has("clamp_center_rad")) {
    double r = 0;
    wf.get("clamp_center_rad", r);
    c.waveform.clamp_center_rad = r;
  }
  if (wf.has("segments")) {
    wf.mark("segments");
    const json& arr = wf.raw().at("segments");
    if (!arr.is_array()) throw ConfigError("waveform.segments", "must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "waveform.segments[" + std::to_string(i) + "]";
      json holder = {{"s", arr[i]}};
      Section seg(holder, "s", "");
      PhaseSegment s;
      try {
        seg.get("start_ps", s.start_ps);
        seg.get("end_ps", s.end_ps);
        seg.get("start_phase_rad", s.start_phase_rad);
        seg.get("slope_rad_per_ps", s.slope_rad_per_ps);
        seg.reject_unknown();
      } catch (const ConfigError& e) {
        throw ConfigError(p + e.field().substr(1), std::string(e.what()).substr(e.field().size() + 2));
      }
      c.waveform.segments.push_back(s);
    }
  }
  wf.reject_unknown();
  root.mark("waveform");

  Section hi(j, "histogram", "");
  hi.get("bin_width_ps", c.histogram.bin_width_ps);
  hi.get("axis_range_ps", c.histogram.axis_range_ps);
  hi.reject_unknown();
  root.mark("histogram");

  Section si(j, "simulation", "");
  si.get("pulses_per_setting", c.pulses_per_setting);
  std::string slots = to_string(c.slots);
  si.get("slots", slots);
  c.slots = slots_from(slots);
  si.reject_unknown();
  root.mark("simulation");

  Section an(j, "analysis", "");
  an.get("windows_ps", c.windows_ps);
  an.get("window_origin_ps", c.window_origin_ps);
  an.get("bootstrap_resamples", c.bootstrap_resamples);
  an.reject_unknown();
  root.mark("analysis");

  Section ml(j, "mle", "");
  ml.get("max_iterations", c.mle.max_iterations);
  ml.get("gradient_tolerance", c.mle.gradient_tolerance);
  ml.get("probability_floor", c.mle.probability_floor);
  std::string init = "linear_inversion";
  ml.get("init", init);
  c.mle.init = mle_init_from(init);
  ml.reject_unknown();
  root.mark("mle");

  root.reject_unknown();
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  if (c.seed) j["seed"] = *c.seed;
  j["output_dir"] = c.output_dir;
  j["emitter"] = {{"tau_xx_ps", c.emitter.tau_xx_ps},
                  {"tau_x_ps", c.emitter.tau_x_ps},
                  {"fss_microev", c.emitter.fss_microev}};
  j["setup"] = {{"delay_line_ps", c.setup.delay_line_ps},
                {"clock_period_ps", c.setup.clock_period_ps},
                {"pulses_per_cycle", c.setup.pulses_per_cycle},
                {"dpm_arm_offset_ps", c.setup.dpm_arm_offset_ps}};
  j["imperfections"] = {{"preset", c.imperfection_preset},
                        {"slope_error", c.imperfections.slope_error},
                        {"extinction_epsilon", c.imperfections.extinction_epsilon},
                        {"drift_sigma_rad", c.imperfections.drift_sigma_rad},
                        {"detector_jitter_sigma_ps", c.imperfections.detector_jitter_sigma_ps},
                        {"dark_count_fraction", c.imperfections.dark_count_fraction}};
  json wf = {{"mode", to_string(c.waveform.mode)}};
  if (c.waveform.mode == WaveformMode::explicit_segments) {
    wf["period_ps"] = c.waveform.period_ps;
    json segs = json::array();
    for (const PhaseSegment& s : c.waveform.segments)
      segs.push_back({{"start_ps", s.start_ps},
                      {"end_ps", s.end_ps},
                      {"start_phase_rad", s.start_phase_rad},
                      {"slope_rad_per_ps", s.slope_rad_per_ps}});
    wf["segments"] = segs;
    if (c.waveform.range_limit_rad) wf["range_limit_rad"] = *c.waveform.range_limit_rad;
    if (c.waveform.clamp_center_rad) wf["clamp_center_rad"] = *c.waveform.clamp_center_rad;
  }
  j["waveform"] = wf;
  j["histogram"] = {{"bin_width_ps", c.histogram.bin_width_ps}, {"axis_range_ps", c.histogram.axis_range_ps}};
  j["simulation"] = {{"pulses_per_setting", c.pulses_per_setting}, {"slots", to_string(c.slots)}};
  j["analysis"] = {{"windows_ps", c.windows_ps},
                   {"window_origin_ps", c.window_origin_ps},
                   {"bootstrap_resamples", c.bootstrap_resamples}};
  j["mle"] = {{"max_iterations", c.mle.max_iterations},
              {"gradient_tolerance", c.mle.gradient_tolerance},
              {"probability_floor", c.mle.probability_floor},
              {"init", c.mle.init == MleInit::linear_inversion ? "linear_inversion" : "maximally_mixed"}};
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    // e.byte is the offset; recover the line for the message.
    std::ifstream again(path);
    int line = 1;
    char ch;
    for (std::size_t k = 1; k < e.byte && again.get(ch); ++k)
      if (ch == '\n') ++line;
    throw ParseError(path.string(), line, e.what());
  }
  return config_from_json(j);
}

SimulationSpec simulation_spec(const RunConfig& c) {
  SimulationSpec spec;
  spec.emitter = c.emitter;
  spec.setup = c.setup;
  spec.imperfections = c.imperfections;
  spec.geometry = c.histogram;
  spec.slots = c.slots;
  switch (c.waveform.mode) {
    case WaveformMode::none:
      break;
    case WaveformMode::ideal: {
      CompensationOptions opt;
      opt.slope_error = c.imperfections.slope_error;
      spec.waveform = build_compensation_waveform(c.emitter, c.setup, opt);
      break;
    }
    case WaveformMode::paper_like:
      spec.waveform = paper_like_waveform(c.emitter, c.setup, c.imperfections);
      break;
    case WaveformMode::explicit_segments: {
      PhaseWaveform w(c.waveform.segments, c.waveform.period_ps);
      if (c.waveform.range_limit_rad)
        w.set_clamp(*c.waveform.range_limit_rad, c.waveform.clamp_center_rad.value_or(w.midpoint_rad()));
      spec.waveform = std::move(w);
      break;
    }
  }
  return spec;
}

}  // namespace dpm
