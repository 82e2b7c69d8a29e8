#pragma once

#include "nlstube/residual.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nlst {

struct ScenarioConfig {
  std::string name = "scenario";
  double p = 3.0;
  int n = 2;
  double A_target = 0.0;
  std::uint64_t seed = 1;

  // curve
  std::string curve = "stationary-circle";
  double radius = 1.0;            // circle
  double r_lo = 1.0, r_hi = 2.0;  // stationary-circle bracket
  double axis_a = 1.5, axis_b = 1.0;  // ellipse
  int knot_p = 2, knot_q = 3;
  double knot_R = 2.0, knot_r = 0.5;
  std::string samples_file;

  // potential
  std::string potential = "radial-cos";
  double V_a = 2.0, V_b = 1.0;  // radial-cos a + b cos r, constant a, quadratic a + sum w_i x_i^2
  std::vector<double> V_weights, V_center;

  // resolutions
  int N_s = 64;
  double dz = 0.02;
  int z_order = 4;
  double gs_r_max = 30.0, gs_dr = 0.01;

  // residual sweep
  std::vector<double> eps_list{0.2, 0.1, 0.05};
  double phi_amplitude = 0.0;  // Phi = amplitude cos(2 pi s / L) Z_1
  bool use_f1 = true;
  bool ablations = false;      // also sweep without corrections and off the stationary radius
  double off_radius = 0.1;

  double euler_tol = 1e-6;
  std::string out_dir = "out";
  std::string source_text;  // raw TOML, hashed into the manifest

  void validate() const;
};

extern const std::vector<std::string> curve_presets;
extern const std::vector<std::string> potential_presets;

ScenarioConfig parse_scenario(const std::string& toml_text);
ScenarioConfig load_scenario(const std::string& path);

// 64-bit FNV-1a of the config text, hex
std::string config_hash(const std::string& text);

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<", ">", "in"
  double lo = 0.0, hi = 0.0;
  bool pass = false;
};

struct StageReport {
  std::string stage;
  std::vector<Check> checks;
  nlohmann::ordered_json summary;
  std::vector<std::string> files;
  bool ok() const;
};

// stage failure carrying the stage name
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "': " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

class Pipeline {
 public:
  explicit Pipeline(ScenarioConfig cfg, bool write_files = true);

  StageReport ground_state();
  StageReport pohozaev();
  StageReport profile();
  StageReport euler();
  StageReport jacobi();
  StageReport f1();
  StageReport residual();
  // every stage in order; the residual stage refuses a non-stationary curve
  std::vector<StageReport> run_all();

  void write_manifest(const std::vector<StageReport>& reports) const;
  const ScenarioConfig& config() const { return cfg_; }

  const GroundState& ground() ;
  const PotentialField& potential() const { return V_; }
  // curve and A used by the reduced stages (A not quantized)
  const CurveModel& curve();
  double reduced_A() ;

 private:
  ScenarioConfig cfg_;
  bool write_;
  PotentialField V_;
  std::optional<GroundState> g_;
  std::optional<CurveModel> curve_;
  double A_ = 0.0;
  double euler_sup_ = -1.0;

  CurveModel curve_for(double A, double eps, double* A_out);
  Mat phi_for(const CurveModel& c) const;
  std::string path(const std::string& file) const;
  void add_file(StageReport& r, const std::string& file, const std::string& contents) const;
};

std::string format_checks(const StageReport& r);

}  // namespace nlst
