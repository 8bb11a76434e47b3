#include "edtl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edtl {

double drying_constant(double air_temp_kelvin) {
  if (!(air_temp_kelvin > 0.0))
    throw std::invalid_argument("drying_constant: temperature must be > 0 K");
  return 0.00719 * std::exp(-130.64 / air_temp_kelvin);
}

double drying_rate(double moisture, double equilibrium_moisture, double k) {
  if (k < 0.0) throw std::invalid_argument("drying_rate: K must be >= 0");
  return k * (moisture - equilibrium_moisture);
}

DryingState step_moisture(const DryingState& s, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_moisture: dt must be > 0");
  if (!(s.fabric_mass > 0.0)) throw std::invalid_argument("step_moisture: fabric mass exhausted");
  if (!(s.air_temp > 0.0)) throw std::invalid_argument("step_moisture: invalid air temperature");
  if (s.moisture < 0.0 || s.equilibrium_moisture < 0.0)
    throw std::invalid_argument("step_moisture: negative moisture");

  const double k = drying_constant(s.air_temp);
  const double rd = drying_rate(s.moisture, s.equilibrium_moisture, k);
  const double dmass = s.flow_in - s.flow_out;
  const double dmoist = (s.flow_in * s.moisture_in - s.flow_out * s.moisture_out -
                         rd * s.fabric_mass - s.moisture * dmass) /
                        s.fabric_mass;

  DryingState next = s;
  next.fabric_mass = s.fabric_mass + dt * dmass;
  if (next.fabric_mass <= 0.0)
    throw std::runtime_error("step_moisture: fabric mass exhausted");
  next.moisture = s.moisture + dt * dmoist;
  // Pure drying cannot pass below equilibrium within a step.
  if (s.moisture >= s.equilibrium_moisture && next.moisture < s.equilibrium_moisture)
    next.moisture = s.equilibrium_moisture;
  if (next.moisture < 0.0) next.moisture = 0.0;
  return next;
}

std::string target_name(TargetKind kind) {
  switch (kind) {
    case TargetKind::electricity: return "E";
    case TargetKind::moisture: return "M";
    case TargetKind::width: return "D";
    case TargetKind::weight: return "W";
  }
  throw std::logic_error("target_name: bad kind");
}

TargetKind target_from_name(const std::string& s) {
  if (s == "E") return TargetKind::electricity;
  if (s == "M") return TargetKind::moisture;
  if (s == "D") return TargetKind::width;
  if (s == "W") return TargetKind::weight;
  throw std::invalid_argument("unknown target '" + s + "' (expected E, M, W or D)");
}

namespace {

struct CatalogEntry {
  const char* name;
  double lo, hi;
};

constexpr CatalogEntry kCatalog[] = {
    {"motor_speed", 20.0, 60.0},
    {"fan_speed_a", 800.0, 1600.0},
    {"fan_speed_b", 800.0, 1600.0},
    {"temp_zone_1", 120.0, 200.0},
    {"temp_zone_2", 120.0, 200.0},
    {"temp_zone_3", 120.0, 200.0},
    {"exhaust_speed", 300.0, 900.0},
    {"ambient_temp", 15.0, 35.0},
    {"ambient_humidity", 30.0, 80.0},
    {"initial_moisture", 0.45, 0.75},
    {"fabric_mass", 120.0, 260.0},
};

const CatalogEntry* catalog_entry(const std::string& name) {
  for (const auto& e : kCatalog)
    if (name == e.name) return &e;
  return nullptr;
}

// Recorded value if the line has the sensor, otherwise the catalog midpoint.
class FeatureView {
 public:
  FeatureView(std::span<const double> x, const LineProfile& p) : x_(x), profile_(p) {}

  double get(const std::string& name) const {
    for (std::size_t i = 0; i < profile_.feature_names.size(); ++i)
      if (profile_.feature_names[i] == name) return x_[i];
    const auto* e = catalog_entry(name);
    if (!e) throw std::invalid_argument("unknown sensor '" + name + "'");
    return 0.5 * (e->lo + e->hi);
  }

  double mean_over(std::initializer_list<const char*> names) const {
    double acc = 0.0;
    for (const char* n : names) acc += get(n);
    return acc / static_cast<double>(names.size());
  }

 private:
  std::span<const double> x_;
  const LineProfile& profile_;
};

double fabric_me_factor(FabricType t) { return t == FabricType::nylon ? 1.0 : 0.75; }
double fabric_w_factor(FabricType t) { return t == FabricType::nylon ? 1.0 : 0.88; }

// Closed-pass Euler integration of the moisture ODE over the dwell time.
// This is the closed-batch reduction of step_moisture (no mass flow, T_a
// constant over the pass), with the drying constant hoisted out of the loop.
double integrate_pass_moisture(double m0, double me, double air_temp_k, double dwell,
                               double dt) {
  const double k = drying_constant(air_temp_k);
  double m = m0;
  double t = 0.0;
  while (t + dt <= dwell) {
    m -= dt * k * (m - me);
    if (m < me && m0 >= me) m = me;
    t += dt;
  }
  const double rest = dwell - t;
  if (rest > 1e-12) {
    m -= rest * k * (m - me);
    if (m < me && m0 >= me) m = me;
  }
  return m;
}

}  // namespace

std::pair<double, double> LineProfile::range_of(const std::string& feature) const {
  const auto it = control_ranges.find(feature);
  if (it != control_ranges.end()) return it->second;
  return catalog_range(feature);
}

void LineProfile::validate() const {
  if (feature_names.empty())
    throw std::invalid_argument("profile '" + name + "': no features");
  for (const auto& f : feature_names)
    if (!catalog_entry(f))
      throw std::invalid_argument("profile '" + name + "': unknown sensor '" + f + "'");
  for (const auto& f : feature_names) {
    const auto [lo, hi] = range_of(f);
    if (!(hi > lo))
      throw std::invalid_argument("profile '" + name + "': degenerate range for '" + f + "'");
  }
  if (noise_level < 0.0)
    throw std::invalid_argument("profile '" + name + "': negative noise level");
}

const std::vector<std::string>& sensor_catalog() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : kCatalog) v.emplace_back(e.name);
    return v;
  }();
  return names;
}

std::pair<double, double> catalog_range(const std::string& feature) {
  const auto* e = catalog_entry(feature);
  if (!e) throw std::invalid_argument("unknown sensor '" + feature + "'");
  return {e->lo, e->hi};
}

std::array<double, 4> synth_targets(std::span<const double> x, const LineProfile& profile,
                                    const SimConfig& cfg, Rng& rng) {
  if (x.size() != profile.feature_names.size())
    throw std::invalid_argument("synth_targets: vector does not match profile features");
  const FeatureView f(x, profile);
  const ResponseParams& r = profile.response;

  const double speed = f.get("motor_speed");
  const double mean_temp = f.mean_over({"temp_zone_1", "temp_zone_2", "temp_zone_3"});
  const double mean_fan = f.mean_over({"fan_speed_a", "fan_speed_b"});
  const double humidity = f.get("ambient_humidity");
  const double m0 = f.get("initial_moisture");
  const double fabric_mass = f.get("fabric_mass");

  const double tn = (mean_temp - 120.0) / 80.0;
  const double fn = (mean_fan - 800.0) / 800.0;
  const double vn = (speed - 20.0) / 40.0;
  const double exn = (f.get("exhaust_speed") - 300.0) / 600.0;

  // Moisture from the drying ODE over the pass dwell time.
  const double air_temp_k = 273.15 + mean_temp;
  const double dwell = cfg.duration * 40.0 / speed;
  const double me = r.me_base * (humidity / 100.0) * fabric_me_factor(profile.fabric_type);
  const double moisture = integrate_pass_moisture(m0, me, air_temp_k, dwell, cfg.dt);

  const double evaporated = (m0 - moisture) * fabric_mass;
  double e = r.e_base + r.e_temp_quad * tn * tn + r.e_temp_lin * tn + r.e_fan * fn +
             r.e_temp_fan * tn * fn + r.e_speed * vn + r.e_exhaust * exn +
             r.e_evap * evaporated;
  double w = r.w_base * fabric_w_factor(profile.fabric_type) *
                 (1.0 - r.w_speed * (vn - 0.5) + r.w_moist * (moisture - 0.05)) -
             r.w_temp * tn;
  double d = r.d_base * (1.0 + r.d_speed * (vn - 0.5) - r.d_temp * (tn - 0.5)) +
             r.d_moist * (moisture - 0.05) * 10.0;
  double m = moisture;

  e = profile.shift_e.scale * e + profile.shift_e.offset;
  m = profile.shift_m.scale * m + profile.shift_m.offset;
  w = profile.shift_w.scale * w + profile.shift_w.offset;
  d = profile.shift_d.scale * d + profile.shift_d.offset;

  e += rng.normal(0.0, profile.noise_level * r.ref_e);
  m += rng.normal(0.0, profile.noise_level * r.ref_m);
  w += rng.normal(0.0, profile.noise_level * r.ref_w);
  d += rng.normal(0.0, profile.noise_level * r.ref_d);
  return {e, m, w, d};
}

Dataset generate_line(const LineProfile& profile, const SimConfig& cfg, TargetKind kind) {
  profile.validate();
  if (cfg.n_rows < 1) throw std::invalid_argument("generate_line: n_rows must be >= 1");
  if (!(cfg.dt > 0.0) || cfg.duration < cfg.dt)
    throw std::invalid_argument("generate_line: invalid dt/duration");

  const std::size_t d = profile.feature_names.size();
  Dataset ds;
  ds.schema.names = profile.feature_names;
  ds.schema.target_name = target_name(kind);
  ds.rows = Matrix(cfg.n_rows, d);
  ds.targets.resize(cfg.n_rows);

  for (std::size_t i = 0; i < cfg.n_rows; ++i) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    auto row = ds.rows.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      const auto [lo, hi] = profile.range_of(profile.feature_names[c]);
      row[c] = rng.uniform(lo, hi);
    }
    const auto targets = synth_targets(row, profile, cfg, rng);
    switch (kind) {
      case TargetKind::electricity: ds.targets[i] = targets[0]; break;
      case TargetKind::moisture: ds.targets[i] = targets[1]; break;
      case TargetKind::weight: ds.targets[i] = targets[2]; break;
      case TargetKind::width: ds.targets[i] = targets[3]; break;
    }
  }
  ds.validate();
  return ds;
}

std::pair<Dataset, Dataset> make_domain_pair(const LineProfile& source_profile,
                                             const LineProfile& target_profile,
                                             std::size_t n_source, std::size_t n_target,
                                             std::uint64_t seed, TargetKind kind,
                                             double dt, double duration) {
  if (n_source <= n_target)
    throw std::invalid_argument("make_domain_pair: n_source must exceed n_target");
  SimConfig scfg{dt, duration, derive_seed(seed, "source-line"), n_source};
  SimConfig tcfg{dt, duration, derive_seed(seed, "target-line"), n_target};
  return {generate_line(source_profile, scfg, kind), generate_line(target_profile, tcfg, kind)};
}

LineProfile profile_alpha() {
  LineProfile p;
  p.name = "alpha";
  p.feature_names = sensor_catalog();  // every sensor installed
  p.noise_level = 0.02;
  p.fabric_type = FabricType::nylon;
  return p;
}

LineProfile profile_beta() {
  LineProfile p;
  p.name = "beta";
  // Newer, sparsely instrumented line: no second fan sensor, no third
  // temperature zone sensor, no exhaust sensor.
  p.feature_names = {"motor_speed",    "fan_speed_a",      "temp_zone_1",
                     "temp_zone_2",    "ambient_temp",     "ambient_humidity",
                     "initial_moisture", "fabric_mass"};
  p.noise_level = 0.02;
  p.fabric_type = FabricType::nylon;
  // Conditional shift: different equipment alters the response surface.
  p.response.me_base = 0.066;
  p.response.e_temp_fan = 58.0;
  p.response.w_speed = 0.21;
  p.response.d_temp = 0.056;
  p.shift_e = {1.06, 9.0};
  p.shift_m = {1.0, 0.004};
  p.shift_w = {0.97, -3.0};
  p.shift_d = {1.01, 1.2};
  return p;
}

LineProfile profile_gamma() {
  LineProfile p = profile_alpha();
  p.name = "gamma";
  // Deliberately mis-matched source: same sensors, strongly shifted response.
  p.response.me_base = 0.035;
  p.response.e_temp_quad = 40.0;
  p.response.e_temp_fan = 10.0;
  p.response.w_moist = 0.3;
  p.shift_e = {1.45, 75.0};
  p.shift_m = {0.7, 0.02};
  p.shift_w = {0.82, -24.0};
  p.shift_d = {0.93, -5.0};
  p.noise_level = 0.03;
  return p;
}

LineProfile profile_by_name(const std::string& name) {
  if (name == "alpha") return profile_alpha();
  if (name == "beta") return profile_beta();
  if (name == "gamma") return profile_gamma();
  throw std::invalid_argument("unknown profile '" + name + "' (built-ins: alpha, beta, gamma)");
}

}  // namespace edtl
