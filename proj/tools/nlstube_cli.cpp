#include "nlstube/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

using namespace nlst;

namespace {

std::vector<double> parse_eps(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("--eps-list: cannot parse '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concentration-on-curves toolkit for the semiclassical NLS: ground states, reduced profiles, "
               "Jacobi spectra and residual scaling of the tube ansatz."};
  app.require_subcommand(1, 1);

  std::string scenario, out_dir, eps_list;
  bool quiet = false;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"ground-state", "Radial ground state of -Lap U + U = U^p in R^(n-1); writes the profile"},
      {"pohozaev", "Moment table and Pohozaev identity residuals of the ground state"},
      {"profile", "Reduced profile h, k, f' along the curve and the quantization of A"},
      {"euler", "Euler residual of the reduced functional along the curve"},
      {"jacobi", "Jacobi operator spectrum, duality with the quadratic form, refinement check"},
      {"f1", "Phase correction f_1 from the T-equation"},
      {"residual", "Residual of the tube ansatz over an eps sweep with log-log slopes"},
      {"run", "Full pipeline: ground-state, pohozaev, profile, euler, jacobi, f1, residual"},
  };
  std::vector<CLI::App*> cmds;
  for (const auto& s : subs) {
    auto* c = app.add_subcommand(s.name, s.help);
    c->add_option("--scenario", scenario, "Scenario TOML file")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    c->add_option("--eps-list", eps_list, "Comma-separated eps values (overrides residual.eps)");
    c->add_flag("--quiet", quiet, "Only print failing checks");
    cmds.push_back(c);
  }
  CLI11_PARSE(app, argc, argv);

  std::string which = app.get_subcommands().front()->get_name();
  std::vector<StageReport> reports;
  std::unique_ptr<Pipeline> pl;
  try {
    ScenarioConfig cfg = load_scenario(scenario);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!eps_list.empty()) cfg.eps_list = parse_eps(eps_list);
    cfg.validate();
    pl = std::make_unique<Pipeline>(cfg);
    if (which == "ground-state") reports.push_back(pl->ground_state());
    else if (which == "pohozaev") reports.push_back(pl->pohozaev());
    else if (which == "profile") reports.push_back(pl->profile());
    else if (which == "euler") reports.push_back(pl->euler());
    else if (which == "jacobi") reports.push_back(pl->jacobi());
    else if (which == "f1") reports.push_back(pl->f1());
    else if (which == "residual") reports.push_back(pl->residual());
    else {
      for (auto fn : {&Pipeline::ground_state, &Pipeline::pohozaev, &Pipeline::profile, &Pipeline::euler,
                      &Pipeline::jacobi, &Pipeline::f1, &Pipeline::residual}) {
        reports.push_back(((*pl).*fn)());
        if (!quiet) std::cout << format_checks(reports.back());
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (pl) pl->write_manifest(reports);
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (pl) pl->write_manifest(reports);
    return 3;
  }
  bool ok = true;
  for (const auto& r : reports) {
    ok = ok && r.ok();
    if (which != "run") {
      if (!quiet) std::cout << format_checks(r);
    }
    if (quiet)
      for (const auto& c : r.checks)
        if (!c.pass) std::cout << "FAIL " << r.stage << ": " << c.name << " = " << c.value << "\n";
  }
  pl->write_manifest(reports);
  if (!quiet) std::cout << (ok ? "all checks passed" : "some checks failed") << "; output in " << pl->config().out_dir << "\n";
  return ok ? 0 : 1;
}
