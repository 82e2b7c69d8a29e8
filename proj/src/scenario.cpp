#include "nlstube/scenario.hpp"

#include "nlstube/spectral.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace nlst {

const std::vector<std::string> curve_presets{"stationary-circle", "circle", "ellipse", "torus-knot", "samples"};
const std::vector<std::string> potential_presets{"constant", "radial-cos", "quadratic"};

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

void reject_unknown(const toml::table& t, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : t) {
    std::string key(k.str());
    if (!known.count(key)) {
      std::vector<std::string> kn(known.begin(), known.end());
      throw ConfigError("unknown key '" + key + "' in " + where + " (known: " + join(kn) + ")");
    }
  }
}

template <class T>
void get(const toml::table& t, const char* key, T& out) {
  auto node = t[key];
  if (!node) return;
  if constexpr (std::is_same_v<T, bool>) {
    auto v = node.value<bool>();
    if (!v) throw ConfigError(std::string("key '") + key + "' must be a boolean");
    out = *v;
  } else if constexpr (std::is_same_v<T, std::string>) {
    auto v = node.value<std::string>();
    if (!v) throw ConfigError(std::string("key '") + key + "' must be a string");
    out = *v;
  } else if constexpr (std::is_integral_v<T>) {
    auto v = node.value<int64_t>();
    if (!v || !node.is_integer()) throw ConfigError(std::string("key '") + key + "' must be an integer");
    out = static_cast<T>(*v);
  } else {
    auto v = node.value<double>();
    if (!v) throw ConfigError(std::string("key '") + key + "' must be a number");
    out = *v;
  }
}

void get_list(const toml::table& t, const char* key, std::vector<double>& out) {
  auto node = t[key];
  if (!node) return;
  auto* arr = node.as_array();
  if (!arr) throw ConfigError(std::string("key '") + key + "' must be an array of numbers");
  out.clear();
  for (auto& e : *arr) {
    auto v = e.value<double>();
    if (!v) throw ConfigError(std::string("key '") + key + "' must be an array of numbers");
    out.push_back(*v);
  }
}

const toml::table* sub(const toml::table& t, const char* key) {
  auto node = t[key];
  if (!node) return nullptr;
  if (!node.is_table()) throw ConfigError(std::string("'") + key + "' must be a table");
  return node.as_table();
}

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

Check check_less(const std::string& name, double v, double lim) {
  return {name, v, "<", lim, lim, std::isfinite(v) && v < lim};
}
Check check_greater(const std::string& name, double v, double lim) {
  return {name, v, ">", lim, lim, std::isfinite(v) && v > lim};
}
Check check_in(const std::string& name, double v, double lo, double hi) {
  return {name, v, "in", lo, hi, std::isfinite(v) && v >= lo && v <= hi};
}

nlohmann::ordered_json checks_json(const std::vector<Check>& cs) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& c : cs) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["value"] = c.value;
    j["relation"] = c.relation;
    if (c.relation == "in")
      j["bounds"] = {c.lo, c.hi};
    else
      j["limit"] = c.lo;
    j["pass"] = c.pass;
    a.push_back(j);
  }
  return a;
}

// smooth random normal section: a few Fourier modes per frame component
Mat random_section(const CurveModel& c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat comps = Mat::Zero(c.N, c.n - 1);
  for (int j = 0; j < c.n - 1; ++j)
    for (int k = 0; k <= 3; ++k) {
      double a = nd(rng), b = nd(rng);
      for (int i = 0; i < c.N; ++i) {
        double t = 2 * M_PI * k * c.sbar[i] / c.L;
        comps(i, j) += (a * std::cos(t) + b * std::sin(t)) / (1.0 + k);
      }
    }
  return c.to_ambient(comps);
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(p > 1.0)) throw ConfigError("p must satisfy p > 1 (got " + num(p) + ")");
  if (n != 2 && n != 3) throw ConfigError("n must be 2 or 3 (got " + std::to_string(n) + ")");
  if (std::find(curve_presets.begin(), curve_presets.end(), curve) == curve_presets.end())
    throw ConfigError("unknown curve preset '" + curve + "' (known: " + join(curve_presets) + ")");
  if (std::find(potential_presets.begin(), potential_presets.end(), potential) == potential_presets.end())
    throw ConfigError("unknown potential preset '" + potential + "' (known: " + join(potential_presets) + ")");
  if (N_s < 8) throw ConfigError("grid.N_s must be at least 8");
  if (!(dz > 0) || !(gs_r_max > 0) || !(gs_dr > 0)) throw ConfigError("grid resolutions must be positive");
  if (z_order != 4 && z_order != 6) throw ConfigError("grid.z_order must be 4 or 6");
  if (eps_list.empty()) throw ConfigError("residual.eps must list at least one value");
  for (double e : eps_list)
    if (!(e > 0 && e < 1)) throw ConfigError("residual.eps values must lie in (0, 1)");
  if (!(A_target >= 0)) throw ConfigError("A must be nonnegative");
  if (curve == "torus-knot" && n != 3) throw ConfigError("curve preset 'torus-knot' needs n = 3");
  if (curve == "samples" && samples_file.empty()) throw ConfigError("curve preset 'samples' needs curve.file");
  if (curve == "stationary-circle" && !(r_lo > 0 && r_hi > r_lo))
    throw ConfigError("stationary-circle needs 0 < r_lo < r_hi");
  if (curve == "circle" && !(radius > 0)) throw ConfigError("curve.radius must be positive");
  if (curve == "ellipse" && !(axis_a > 0 && axis_b > 0)) throw ConfigError("ellipse axes must be positive");
  if (potential == "quadratic" && static_cast<int>(V_weights.size()) != n)
    throw ConfigError("potential.weights must have n entries");
  if (!V_center.empty() && static_cast<int>(V_center.size()) != n)
    throw ConfigError("potential.center must have n entries");
  if (!(euler_tol > 0)) throw ConfigError("euler_tol must be positive");
  if (out_dir.empty()) throw ConfigError("output.dir must not be empty");
}

ScenarioConfig parse_scenario(const std::string& text) {
  toml::table t;
  try {
    t = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML parse error: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  ScenarioConfig c;
  c.source_text = text;
  reject_unknown(t, {"name", "p", "n", "A", "seed", "euler_tol", "curve", "potential", "grid", "residual", "output"},
                 "top level");
  get(t, "name", c.name);
  get(t, "p", c.p);
  get(t, "n", c.n);
  get(t, "A", c.A_target);
  get(t, "seed", c.seed);
  get(t, "euler_tol", c.euler_tol);
  if (auto* s = sub(t, "curve")) {
    reject_unknown(*s, {"preset", "radius", "r_lo", "r_hi", "a", "b", "knot_p", "knot_q", "R", "r", "file"}, "[curve]");
    get(*s, "preset", c.curve);
    get(*s, "radius", c.radius);
    get(*s, "r_lo", c.r_lo);
    get(*s, "r_hi", c.r_hi);
    get(*s, "a", c.axis_a);
    get(*s, "b", c.axis_b);
    get(*s, "knot_p", c.knot_p);
    get(*s, "knot_q", c.knot_q);
    get(*s, "R", c.knot_R);
    get(*s, "r", c.knot_r);
    get(*s, "file", c.samples_file);
  }
  if (auto* s = sub(t, "potential")) {
    reject_unknown(*s, {"preset", "a", "b", "weights", "center"}, "[potential]");
    get(*s, "preset", c.potential);
    get(*s, "a", c.V_a);
    get(*s, "b", c.V_b);
    get_list(*s, "weights", c.V_weights);
    get_list(*s, "center", c.V_center);
  }
  if (auto* s = sub(t, "grid")) {
    reject_unknown(*s, {"N_s", "dz", "z_order", "r_max", "dr"}, "[grid]");
    get(*s, "N_s", c.N_s);
    get(*s, "dz", c.dz);
    get(*s, "z_order", c.z_order);
    get(*s, "r_max", c.gs_r_max);
    get(*s, "dr", c.gs_dr);
  }
  if (auto* s = sub(t, "residual")) {
    reject_unknown(*s, {"eps", "phi_amplitude", "use_f1", "ablations", "off_radius"}, "[residual]");
    get_list(*s, "eps", c.eps_list);
    get(*s, "phi_amplitude", c.phi_amplitude);
    get(*s, "use_f1", c.use_f1);
    get(*s, "ablations", c.ablations);
    get(*s, "off_radius", c.off_radius);
  }
  if (auto* s = sub(t, "output")) {
    reject_unknown(*s, {"dir"}, "[output]");
    get(*s, "dir", c.out_dir);
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ScenarioConfig c = parse_scenario(ss.str());
  if (c.curve == "samples" && std::filesystem::path(c.samples_file).is_relative())
    c.samples_file = (std::filesystem::path(path).parent_path() / c.samples_file).string();
  return c;
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

bool StageReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string format_checks(const StageReport& r) {
  std::ostringstream os;
  for (const auto& c : r.checks) {
    os << (c.pass ? "PASS " : "FAIL ") << r.stage << ": " << c.name << " = " << std::setprecision(6) << c.value;
    if (c.relation == "in")
      os << " in [" << c.lo << ", " << c.hi << "]";
    else
      os << " " << c.relation << " " << c.lo;
    os << "\n";
  }
  return os.str();
}

Pipeline::Pipeline(ScenarioConfig cfg, bool write_files) : cfg_(std::move(cfg)), write_(write_files) {
  cfg_.validate();
  Vec center = Vec::Zero(cfg_.n);
  if (!cfg_.V_center.empty()) center = Eigen::Map<const Vec>(cfg_.V_center.data(), cfg_.n);
  if (cfg_.potential == "constant")
    V_ = PotentialField::constant(cfg_.n, cfg_.V_a);
  else if (cfg_.potential == "radial-cos")
    V_ = PotentialField::radial_cos(cfg_.n, cfg_.V_a, cfg_.V_b, center);
  else
    V_ = PotentialField::quadratic(cfg_.n, cfg_.V_a, Eigen::Map<const Vec>(cfg_.V_weights.data(), cfg_.n), center);
  if (write_) std::filesystem::create_directories(cfg_.out_dir);
}

const GroundState& Pipeline::ground() {
  if (!g_) {
    GroundStateOptions o;
    o.r_max = cfg_.gs_r_max;
    o.dr = cfg_.gs_dr;
    g_ = solve_ground_state(cfg_.p, cfg_.n - 1, o);
  }
  return *g_;
}

const CurveModel& Pipeline::curve() {
  if (curve_) return *curve_;
  const auto& c = cfg_;
  A_ = c.A_target;
  if (c.curve == "stationary-circle") {
    if (!V_.is_radial()) throw StageError("profile", "stationary-circle needs a radial potential");
    double r = find_stationary_circle(V_, A_, c.p, c.n, c.r_lo, c.r_hi);
    curve_ = circle_curve(r, c.n, c.N_s, V_.center());
  } else if (c.curve == "circle") {
    curve_ = circle_curve(c.radius, c.n, c.N_s, V_.center());
  } else if (c.curve == "ellipse") {
    curve_ = ellipse_curve(c.axis_a, c.axis_b, c.n, c.N_s);
  } else if (c.curve == "torus-knot") {
    curve_ = torus_knot_curve(c.knot_p, c.knot_q, c.knot_R, c.knot_r, c.N_s);
  } else {
    curve_ = arclength_reparam(load_samples_csv(c.samples_file, c.n), c.N_s);
  }
  return *curve_;
}

double Pipeline::reduced_A() {
  curve();
  return A_;
}

CurveModel Pipeline::curve_for(double A, double eps, double* A_out) {
  if (cfg_.curve == "stationary-circle") {
    CircleFit fit = stationary_quantized_circle(V_, cfg_.p, cfg_.n, A, eps, cfg_.N_s, cfg_.r_lo, cfg_.r_hi);
    *A_out = fit.A;
    return circle_curve(fit.r, cfg_.n, cfg_.N_s, V_.center());
  }
  const CurveModel& c = curve();
  *A_out = A == 0.0 ? 0.0 : quantize_A(c, V_, cfg_.p, eps, A).A;
  return c;
}

Mat Pipeline::phi_for(const CurveModel& c) const {
  if (cfg_.phi_amplitude == 0.0) return Mat();
  Mat comps = Mat::Zero(c.N, c.n - 1);
  for (int i = 0; i < c.N; ++i) comps(i, 0) = cfg_.phi_amplitude * std::cos(2 * M_PI * c.sbar[i] / c.L);
  return c.to_ambient(comps);
}

std::string Pipeline::path(const std::string& file) const { return (std::filesystem::path(cfg_.out_dir) / file).string(); }

void Pipeline::add_file(StageReport& r, const std::string& file, const std::string& contents) const {
  r.files.push_back(file);
  if (!write_) return;
  std::ofstream out(path(file));
  if (!out) throw StageError(r.stage, "cannot write " + path(file));
  out << contents;
}

StageReport Pipeline::ground_state() {
  StageReport r;
  r.stage = "ground-state";
  const GroundState& g = ground();
  std::ostringstream csv;
  csv << "r,U,Up\n" << std::setprecision(17);
  for (int i = 0; i < g.r.size(); ++i) csv << g.r[i] << "," << g.U[i] << "," << g.Up[i] << "\n";
  add_file(r, "ground_state.csv", csv.str());
  double res = ode_residual(g);
  r.summary["p"] = g.p;
  r.summary["d"] = g.d;
  r.summary["U0"] = g.U0;
  r.summary["decay_rate"] = g.decay_rate;
  r.summary["ode_residual"] = res;
  r.checks.push_back(check_less("ode residual", res, 1e-6));
  if (g.d == 1) {
    GroundStateOptions o;
    o.r_max = cfg_.gs_r_max;
    o.dr = cfg_.gs_dr;
    GroundState s = soliton_closed_form(cfg_.p, o);
    double err = 0.0;
    for (int i = 0; i < g.r.size(); ++i) err = std::max(err, std::abs(g.U[i] - evaluate(s, g.r[i]).U));
    r.summary["soliton_error"] = err;
    r.checks.push_back(check_less("closed-form soliton error", err, 1e-8));
  }
  add_file(r, "ground_state.json", r.summary.dump(2) + "\n");
  return r;
}

StageReport Pipeline::pohozaev() {
  StageReport r;
  r.stage = "pohozaev";
  const GroundState& g = ground();
  MomentTable m = moments(g);
  PohozaevReport rep = pohozaev_report(m, cfg_.p, g.d);
  r.summary["p"] = g.p;
  r.summary["d"] = g.d;
  r.summary["moments"] = {{"U2", m.m2}, {"gradU2", m.mg}, {"Up1", m.mp1},
                          {"z2U2", m.z2m2}, {"z2gradU2", m.z2mg}, {"z2Up1", m.z2mp1}};
  r.summary["residuals"] = {{"gradient_identity", rep.grad_identity},
                            {"weighted_energy", rep.weighted_energy},
                            {"weighted_mass", rep.weighted_mass},
                            {"weighted_l2", rep.weighted_l2},
                            {"mass_balance", rep.mass_balance}};
  r.summary["quad_error"] = rep.quad_error;
  r.checks.push_back(check_less("max Pohozaev residual", rep.max_residual(), 1e-6));
  r.checks.push_back(check_less("quadrature error estimate", rep.quad_error, 1e-8));
  add_file(r, "pohozaev.json", r.summary.dump(2) + "\n");
  return r;
}

StageReport Pipeline::profile() {
  StageReport r;
  r.stage = "profile";
  const CurveModel& c = curve();
  ProfileFields pf;
  try {
    pf = profile_fields(c, V_, A_, cfg_.p);
  } catch (const std::exception& e) {
    throw StageError(r.stage, e.what());
  }
  std::ostringstream csv;
  csv << "s,V,h,k,fp,f\n" << std::setprecision(17);
  for (int i = 0; i < pf.N(); ++i)
    csv << pf.sbar[i] << "," << pf.V[i] << "," << pf.h[i] << "," << pf.k[i] << "," << pf.fp[i] << "," << pf.f[i] << "\n";
  add_file(r, "profile.csv", csv.str());
  r.summary["A"] = A_;
  r.summary["L"] = c.L;
  r.summary["relation_defect"] = pf.relation_defect();
  r.summary["phase_ode_defect"] = pf.phase_ode_defect();
  r.summary["reduced_energy"] = reduced_energy(pf);
  r.checks.push_back(check_less("profile relation defect", pf.relation_defect(), 1e-10));
  r.checks.push_back(check_less("phase ODE defect", pf.phase_ode_defect(), 1e-10));
  auto q = nlohmann::ordered_json::array();
  double worst = 0.0;
  for (double eps : cfg_.eps_list) {
    Quantization qa = A_ == 0.0 ? Quantization{0.0, 0, 0.0} : quantize_A(c, V_, cfg_.p, eps, A_);
    q.push_back({{"eps", eps}, {"A", qa.A}, {"m", qa.m}, {"defect", qa.defect}});
    worst = std::max(worst, qa.defect);
  }
  r.summary["quantization"] = q;
  r.checks.push_back(check_less("quantization defect", worst, 1e-10));
  add_file(r, "profile.json", r.summary.dump(2) + "\n");
  return r;
}

StageReport Pipeline::euler() {
  StageReport r;
  r.stage = "euler";
  const CurveModel& c = curve();
  Mat E = euler_residual(c, V_, A_, cfg_.p);
  std::ostringstream csv;
  csv << "s";
  for (int j = 0; j < E.cols(); ++j) csv << ",E" << j + 1;
  csv << "\n" << std::setprecision(17);
  for (int i = 0; i < E.rows(); ++i) {
    csv << c.sbar[i];
    for (int j = 0; j < E.cols(); ++j) csv << "," << E(i, j);
    csv << "\n";
  }
  add_file(r, "euler.csv", csv.str());
  euler_sup_ = E.cwiseAbs().maxCoeff();
  r.summary["sup"] = euler_sup_;
  if (cfg_.curve == "stationary-circle") r.summary["radius"] = (c.gamma.row(0) - V_.center().transpose()).norm();
  r.checks.push_back(check_less("Euler residual sup", euler_sup_, cfg_.euler_tol));
  add_file(r, "euler.json", r.summary.dump(2) + "\n");
  return r;
}

StageReport Pipeline::jacobi() {
  StageReport r;
  r.stage = "jacobi";
  const CurveModel& c = curve();
  if (euler_sup_ < 0) euler_sup_ = euler_residual(c, V_, A_, cfg_.p).cwiseAbs().maxCoeff();
  bool stationary = euler_sup_ < cfg_.euler_tol;
  JacobiForm form = stationary ? JacobiForm::Reduced : JacobiForm::Unreduced;
  ProfileFields pf = profile_fields(c, V_, A_, cfg_.p);
  JacobiMatrix J = assemble_jacobi(c, V_, pf, form);
  Spectrum sp = spectrum(J);
  std::ostringstream csv;
  csv << "re,im\n" << std::setprecision(17);
  for (int i = 0; i < sp.eigenvalues.size(); ++i) csv << sp.eigenvalues[i].real() << "," << sp.eigenvalues[i].imag() << "\n";
  add_file(r, "jacobi_spectrum.csv", csv.str());
  SymmetryReport sym = symmetry_report(J);
  r.summary["form"] = stationary ? "reduced" : "unreduced";
  r.summary["N_s"] = c.N;
  r.summary["min_abs"] = sp.min_abs;
  r.summary["second_abs"] = sp.second_abs;
  r.summary["norm"] = sp.norm;
  r.summary["max_imag"] = sp.max_imag;
  r.summary["invertible"] = sp.invertible;
  r.summary["asymmetry"] = sym.plain;
  r.summary["asymmetry_hk"] = sym.weighted;
  r.checks.push_back(check_greater("min |eigenvalue| / norm", sp.min_abs / sp.norm, 1e-10));
  // duality of the assembled operator with the quadratic form
  std::mt19937_64 rng(cfg_.seed);
  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    Mat a = random_section(c, rng), b = random_section(c, rng);
    double q = quadratic_form(c, V_, pf, a, b), pr = jacobi_pairing(J, c, a, b);
    double scale = std::sqrt(std::abs(quadratic_form(c, V_, pf, a, a)) * std::abs(quadratic_form(c, V_, pf, b, b)));
    worst = std::max(worst, std::abs(q - pr) / std::max(scale, 1e-300));
  }
  r.summary["duality_defect"] = worst;
  r.checks.push_back(check_less("operator/quadratic-form duality", worst, 1e-6));
  if (cfg_.curve != "samples") {
    ScenarioConfig c2 = cfg_;
    c2.N_s = 2 * cfg_.N_s;
    Pipeline fine(c2, false);
    const CurveModel& cf = fine.curve();
    Spectrum s2 = spectrum(assemble_jacobi(cf, V_, fine.reduced_A(), cfg_.p, form));
    double rel = std::abs(s2.min_abs - sp.min_abs) / std::max(s2.min_abs, 1e-300);
    r.summary["min_abs_refined"] = s2.min_abs;
    r.checks.push_back(check_less("min |eigenvalue| change under N_s doubling", rel, 5e-4));
  }
  add_file(r, "jacobi.json", r.summary.dump(2) + "\n");
  return r;
}

StageReport Pipeline::f1() {
  StageReport r;
  r.stage = "f1";
  const CurveModel& c = curve();
  ProfileFields pf = profile_fields(c, V_, A_, cfg_.p);
  Mat phi = phi_for(c);
  if (phi.size() == 0) phi = Mat::Zero(c.N, c.n);
  F1Solution s;
  try {
    s = solve_f1(c, V_, pf, phi);
  } catch (const std::exception& e) {
    throw StageError(r.stage, e.what());
  }
  std::ostringstream csv;
  csv << "s,fp1,f1\n" << std::setprecision(17);
  for (int i = 0; i < c.N; ++i) csv << c.sbar[i] << "," << s.fp1[i] << "," << s.f1[i] << "\n";
  add_file(r, "f1.csv", csv.str());
  r.summary["A"] = A_;
  r.summary["A_prime_phi"] = s.c;
  r.summary["T_residual"] = s.T_residual;
  r.summary["mean"] = s.mean;
  r.checks.push_back(check_less("T-equation residual", s.T_residual, 1e-8));
  r.checks.push_back(check_less("|mean f1'|", std::abs(s.mean), 1e-10));
  add_file(r, "f1.json", r.summary.dump(2) + "\n");
  return r;
}

StageReport Pipeline::residual() {
  StageReport r;
  r.stage = "residual";
  const CurveModel& c0 = curve();
  if (euler_sup_ < 0) euler_sup_ = euler_residual(c0, V_, A_, cfg_.p).cwiseAbs().maxCoeff();
  if (!(euler_sup_ < cfg_.euler_tol)) {
    std::ostringstream os;
    os << "Euler residual too large for residual stage (sup " << euler_sup_ << " >= " << cfg_.euler_tol << ")";
    throw StageError(r.stage, os.str());
  }
  const GroundState& g = ground();
  struct Row {
    double eps, A, r;
    ResidualEntry e;
  };
  auto sweep = [&](bool corrections, double dr_off, const std::string& tag) {
    std::vector<Row> rows;
    for (double eps : cfg_.eps_list) {
      double A = 0.0;
      CurveModel c = curve_for(cfg_.A_target, eps, &A);
      if (dr_off != 0.0) {
        double rad = (c.gamma.row(0) - V_.center().transpose()).norm() + dr_off;
        c = circle_curve(rad, cfg_.n, cfg_.N_s, V_.center());
        A = cfg_.A_target == 0.0 ? 0.0 : quantize_A(c, V_, cfg_.p, eps, cfg_.A_target).A;
      }
      HarnessSetup S = make_setup(c, V_, A, cfg_.p, g, phi_for(c), cfg_.use_f1);
      ResidualOptions o;
      o.eps = eps;
      o.dz = cfg_.dz;
      o.order = cfg_.z_order;
      o.corrections = corrections;
      o.force_solvability = dr_off != 0.0;
      TubeField f;
      try {
        f = assemble_psi1(S, o);
      } catch (const std::exception& e) {
        throw StageError(r.stage, std::string(e.what()) + " (eps = " + num(eps) + ")");
      }
      CMat res = apply_nls_operator(f, S);
      Row row{eps, A, (c.gamma.row(0) - c.gamma.colwise().mean()).norm(), {}};
      row.e.eps = eps;
      row.e.norms = residual_norms(f, res, S);
      KernelProjections kp = project_residual(f, res);
      row.e.Pi_sup = kp.Pi_sup;
      row.e.Pr_sup = kp.Pr_sup;
      row.e.winding_defect =
          std::abs(f.winding - 2 * M_PI * eps * std::round(f.winding / (2 * M_PI * eps)));
      row.e.Jmin = f.Jmin;
      row.e.kernel_projection = f.kernel_projection;
      row.e.boundary_max = f.boundary_max;
      row.e.Ns = f.Ns;
      row.e.Nz = f.zg.size();
      rows.push_back(row);
      if (tag.empty()) {
        std::ostringstream pc;
        pc << "s,Pi";
        for (int j = 0; j < kp.Pr.cols(); ++j) pc << ",Pr" << j + 1;
        pc << "\n" << std::setprecision(17);
        for (int i = 0; i < f.Ns; ++i) {
          pc << f.sbar[i] << "," << kp.Pi[i];
          for (int j = 0; j < kp.Pr.cols(); ++j) pc << "," << kp.Pr(i, j);
          pc << "\n";
        }
        std::ostringstream name;
        name << "projections_eps" << eps << ".csv";
        add_file(r, name.str(), pc.str());
      }
    }
    std::ostringstream csv;
    csv << "eps,A,sup,l2,Pi_sup,Pr_sup,winding_defect,Jmin,kernel_projection,boundary_max,Ns,Nz\n"
        << std::setprecision(17);
    for (const auto& w : rows)
      csv << w.eps << "," << w.A << "," << w.e.norms.sup << "," << w.e.norms.l2 << "," << w.e.Pi_sup << ","
          << w.e.Pr_sup << "," << w.e.winding_defect << "," << w.e.Jmin << "," << w.e.kernel_projection << ","
          << w.e.boundary_max << "," << w.e.Ns << "," << w.e.Nz << "\n";
    add_file(r, "residual" + (tag.empty() ? "" : "_" + tag) + ".csv", csv.str());
    return rows;
  };
  auto slope = [&](const std::vector<Row>& rows, auto get) -> std::optional<double> {
    if (rows.size() < 3) return std::nullopt;
    std::vector<double> e, v;
    for (const auto& w : rows) {
      if (!(get(w) > 0)) return std::nullopt;
      e.push_back(w.eps);
      v.push_back(get(w));
    }
    return scaling_fit(e, v);
  };
  auto sup_of = [](const Row& w) { return w.e.norms.sup; };
  auto rows = sweep(true, 0.0, "");
  double wind = 0.0, kproj = 0.0;
  bool decreasing = true;
  for (size_t i = 0; i < rows.size(); ++i) {
    wind = std::max(wind, rows[i].e.winding_defect);
    kproj = std::max(kproj, rows[i].e.kernel_projection);
    if (i && rows[i].eps < rows[i - 1].eps && !(rows[i].e.norms.sup < rows[i - 1].e.norms.sup)) decreasing = false;
    if (!std::isfinite(rows[i].e.norms.sup) || !std::isfinite(rows[i].e.norms.l2)) decreasing = false;
  }
  r.checks.push_back(check_less("phase winding defect", wind, 1e-10));
  r.checks.push_back(check_less("w_ro kernel projection", kproj, 1e-8));
  r.checks.push_back({"norms finite and decreasing in eps", decreasing ? 1.0 : 0.0, ">", 0.5, 0.5, decreasing});
  auto sl = nlohmann::ordered_json::object();
  if (auto s = slope(rows, sup_of)) {
    sl["sup"] = *s;
    r.checks.push_back(check_in("sup-norm slope", *s, 1.7, 2.3));
  }
  if (auto s = slope(rows, [](const Row& w) { return w.e.norms.l2; })) sl["l2"] = *s;
  if (auto s = slope(rows, [](const Row& w) { return w.e.Pi_sup; })) sl["Pi"] = *s;
  if (auto s = slope(rows, [](const Row& w) { return w.e.Pr_sup; })) {
    sl["Pr"] = *s;
    if (cfg_.phi_amplitude == 0.0) r.checks.push_back(check_greater("real kernel projection slope", *s, 2.5));
  }
  if (cfg_.ablations) {
    auto plain = sweep(false, 0.0, "no_corrections");
    if (auto s = slope(plain, sup_of)) {
      sl["no_corrections"] = *s;
      r.checks.push_back(check_in("ablation slope, no corrections", *s, 0.8, 1.3));
    }
    if (cfg_.curve == "stationary-circle") {
      auto off = sweep(true, cfg_.off_radius, "off_stationary");
      if (auto s = slope(off, sup_of)) {
        sl["off_stationary"] = *s;
        r.checks.push_back(check_in("ablation slope, off-stationary radius", *s, 0.8, 1.3));
      }
    }
  }
  r.summary["slopes"] = sl;
  r.summary["euler_sup"] = euler_sup_;
  auto ent = nlohmann::ordered_json::array();
  for (const auto& w : rows)
    ent.push_back({{"eps", w.eps}, {"A", w.A}, {"sup", w.e.norms.sup}, {"l2", w.e.norms.l2},
                   {"Pi_sup", w.e.Pi_sup}, {"Pr_sup", w.e.Pr_sup}, {"boundary_max", w.e.boundary_max}});
  r.summary["entries"] = ent;
  add_file(r, "residual.json", r.summary.dump(2) + "\n");
  return r;
}

std::vector<StageReport> Pipeline::run_all() {
  std::vector<StageReport> out;
  out.push_back(ground_state());
  out.push_back(pohozaev());
  out.push_back(profile());
  out.push_back(euler());
  out.push_back(jacobi());
  out.push_back(f1());
  out.push_back(residual());
  return out;
}

void Pipeline::write_manifest(const std::vector<StageReport>& reports) const {
  if (!write_) return;
  nlohmann::ordered_json m;
  m["tool"] = "nlstube";
  m["version"] = "1.0.0";
  m["scenario"] = cfg_.name;
  m["config_hash"] = config_hash(cfg_.source_text);
  m["seed"] = cfg_.seed;
  m["tolerances"] = {{"euler", cfg_.euler_tol}, {"profile", 1e-10}, {"pohozaev", 1e-6}, {"duality", 1e-6}};
  auto st = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& r : reports) {
    st.push_back({{"stage", r.stage}, {"pass", r.ok()}, {"checks", checks_json(r.checks)}, {"files", r.files}});
    all = all && r.ok();
  }
  m["stages"] = st;
  m["pass"] = all;
  std::ofstream out(path("manifest.json"));
  out << m.dump(2) << "\n";
}

}  // namespace nlst
