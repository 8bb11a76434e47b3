#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "edtl/dataset.hpp"
#include "edtl/rng.hpp"

namespace edtl {

// State of the fabric drying ODE. Temperatures in Kelvin, flows in kg/s,
// moisture as mass fraction.
struct DryingState {
  double moisture = 0.0;             // M
  double fabric_mass = 1.0;          // m_f
  double flow_in = 0.0;              // G_in
  double flow_out = 0.0;             // G_out
  double moisture_in = 0.0;          // M_in
  double moisture_out = 0.0;         // M_out
  double equilibrium_moisture = 0.0; // M_e
  double air_temp = 300.0;           // T_a
};

// K = 0.00719 * exp(-130.64 / T_a), T_a in Kelvin.
double drying_constant(double air_temp_kelvin);

// R_d = K * (M - M_e)
double drying_rate(double moisture, double equilibrium_moisture, double k);

// One explicit-Euler step of the moisture/mass balance. Drying cannot
// overshoot below equilibrium within a step; a step that exhausts the fabric
// mass is an error.
DryingState step_moisture(const DryingState& s, double dt);

enum class TargetKind { electricity, moisture, width, weight };
std::string target_name(TargetKind kind);         // "E", "M", "D", "W"
TargetKind target_from_name(const std::string&);

// Coefficients of the synthetic response surfaces for E, W, D and the
// equilibrium-moisture mapping. These are documented fixtures: the learning
// experiments only need a nonlinear, shiftable ground truth.
struct ResponseParams {
  double me_base = 0.060;    // M_e = me_base * humidity/100 * fabric factor

  // electricity (kWh-ish): base + temperature curve + fan terms + speed +
  // exhaust + latent heat of the evaporated water
  double e_base = 60.0;
  double e_temp_quad = 90.0;
  double e_temp_lin = 60.0;
  double e_fan = 35.0;
  double e_temp_fan = 45.0;
  double e_speed = 25.0;
  double e_exhaust = 15.0;
  double e_evap = 0.45;

  // fabric weight (g/m^2): base modulated by tension, residual moisture, heat
  double w_base = 205.0;
  double w_speed = 0.16;
  double w_moist = 0.9;
  double w_temp = 14.0;

  // fabric width (cm)
  double d_base = 145.0;
  double d_speed = 0.055;
  double d_temp = 0.045;
  double d_moist = 6.5;

  // typical magnitudes used to scale observation noise
  double ref_e = 250.0;
  double ref_m = 0.08;
  double ref_w = 205.0;
  double ref_d = 145.0;
};

// Affine conditional-shift knob applied to each noiseless target.
struct TargetShift {
  double scale = 1.0;
  double offset = 0.0;
};

enum class FabricType { nylon, polyester };

// One production line: which sensors it records, their sampling ranges, its
// response coefficients, its conditional shift and its observation noise.
struct LineProfile {
  std::string name;
  std::vector<std::string> feature_names;              // subset of the catalog
  std::map<std::string, std::pair<double, double>> control_ranges;
  ResponseParams response;
  TargetShift shift_e, shift_m, shift_w, shift_d;
  double noise_level = 0.02;
  FabricType fabric_type = FabricType::nylon;

  std::pair<double, double> range_of(const std::string& feature) const;
  void validate() const;
};

struct SimConfig {
  double dt = 0.1;        // Euler step (s)
  double duration = 600;  // pass time at the reference motor speed (s)
  std::uint64_t seed = 0;
  std::size_t n_rows = 1000;
};

// Full sensor catalog with global sampling ranges; profiles record subsets.
const std::vector<std::string>& sensor_catalog();
std::pair<double, double> catalog_range(const std::string& feature);

// Noisy (E, M, W, D) for one sample of a line's recorded features. Sensors
// the line does not record enter the response at their catalog midpoints.
std::array<double, 4> synth_targets(std::span<const double> x, const LineProfile& profile,
                                    const SimConfig& cfg, Rng& rng);

// n_rows samples with controls drawn from the profile ranges; per-row
// counter-derived RNG streams, so generation order never matters.
Dataset generate_line(const LineProfile& profile, const SimConfig& cfg, TargetKind kind);

// Source/target datasets at the paper's order-of-magnitude ratio.
std::pair<Dataset, Dataset> make_domain_pair(const LineProfile& source_profile,
                                             const LineProfile& target_profile,
                                             std::size_t n_source, std::size_t n_target,
                                             std::uint64_t seed, TargetKind kind,
                                             double dt = 0.1, double duration = 600.0);

// Built-in profiles: "alpha" (data-rich source), "beta" (data-poor target
// with fewer sensors and a shifted response), "gamma" (a deliberately
// mis-shifted source used for negative-transfer studies).
LineProfile profile_alpha();
LineProfile profile_beta();
LineProfile profile_gamma();
LineProfile profile_by_name(const std::string& name);

}  // namespace edtl
