#include <allspeed/allspeed.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace allspeed;

const std::vector<std::string> kConfigKeys{
    "preset",  "dimension", "lambda_coeff",   "gamma",        "epsilon",    "alpha",
    "sigma",   "m",         "m1",             "m2",           "domain_a",   "domain_b",
    "dt",      "t_final",   "stepper",        "variant",      "stencil",    "snapshot_times",
    "output_dir", "initial_csv", "newton_tol", "newton_max_iter", "linear_tol", "dphi2_literal"};

/// One string option per config key; flags given on the command line are
/// appended after the config file entries and so override them.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", file, "config file (key = value lines)");
    for (const auto& k : kConfigKeys) app->add_option("--" + k, values[k], "config key " + k);
  }

  ConfigEntries entries(CLI::App* app) const {
    ConfigEntries e;
    if (!file.empty()) e = read_config_file(file);
    for (const auto& k : kConfigKeys)
      if (app->count("--" + k) > 0) e.emplace_back(k, values.at(k));
    return e;
  }
};

std::vector<double> parse_doubles(const std::string& key, const std::string& v) {
  return detail::parse_list(key, v);
}

std::vector<std::size_t> parse_counts(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(detail::parse_count(key, detail::trim(item)));
  if (out.empty()) throw ConfigError("'" + key + "' needs at least one value");
  return out;
}

/// "M:dt,M:dt,..." with dt possibly a fraction.
std::vector<Table2Level> parse_levels(const std::string& v) {
  std::vector<Table2Level> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("levels entries must read M:dt");
    out.push_back({detail::parse_count("levels", detail::trim(item.substr(0, colon))),
                   detail::parse_double("levels", detail::trim(item.substr(colon + 1)))});
  }
  if (out.empty()) throw ConfigError("levels: no entries");
  return out;
}

void emit(const std::string& text, const std::string& path) {
  std::cout << text;
  if (!path.empty()) write_file(path, text);
}

int report(const RunOutcome& out) {
  if (out.exit_code == kExitOk)
    std::cout << "ok: " << out.steps << " steps, " << out.files.size() << " files\n";
  else
    std::cerr << "error: " << out.message << '\n';
  return out.exit_code;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-implicit all-speed solver for the isentropic Euler equations"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "integrate one configured problem");
  run_flags.attach(run_cmd);

  std::string t1_eps = "0.8,0.3,0.05", t1_m = "100,200,400,800", t1_variant = "ld", t1_out;
  double t1_T = 0.1;
  auto* t1 = app.add_subcommand("table1", "largest stable dt on Example 1");
  t1->add_option("--eps", t1_eps, "comma-separated epsilon values");
  t1->add_option("--m", t1_m, "comma-separated cell counts");
  t1->add_option("--variant", t1_variant, "nl, l or ld");
  t1->add_option("--t-final", t1_T, "final time");
  t1->add_option("-o,--out", t1_out, "CSV output path");

  std::string t2_eps = "0.8,0.05", t2_levels, t2_norm = "literal", t2_out;
  std::size_t t2_ref_m = 1280;
  std::string t2_ref_dt = "1/128000";
  auto* t2 = app.add_subcommand("table2", "errors and ratios against a fine explicit reference");
  t2->add_option("--eps", t2_eps, "comma-separated epsilon values");
  t2->add_option("--levels", t2_levels, "M:dt pairs used for every epsilon (default: published levels)");
  t2->add_option("--norm", t2_norm, "literal or rms");
  t2->add_option("--ref-m", t2_ref_m, "reference cell count");
  t2->add_option("--ref-dt", t2_ref_dt, "reference time step");
  t2->add_option("-o,--out", t2_out, "CSV output path");

  std::string ci_eps = "0.8", ci_dt = "1/20000", ci_T = "0.01", ci_out = "compare_ice";
  std::size_t ci_m = 200;
  auto* ci = app.add_subcommand("compare-ice", "AP against ICE on Example 1");
  ci->add_option("--epsilon", ci_eps, "Mach number");
  ci->add_option("--m", ci_m, "cell count");
  ci->add_option("--dt", ci_dt, "time step");
  ci->add_option("--t-final", ci_T, "final time");
  ci->add_option("-o,--out", ci_out, "output directory");

  ConfigFlags sweep_flags;
  std::vector<std::string> sweep_axes;
  std::string sweep_out = "sweep";
  auto* sw = app.add_subcommand("sweep", "cartesian product of runs, executed concurrently");
  sweep_flags.attach(sw);
  sw->add_option("--axis", sweep_axes, "key=v1;v2;... (repeatable)");
  sw->add_option("--sweep-out", sweep_out, "root directory of the sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return report(run(build_config(run_flags.entries(run_cmd))));

    if (t1->parsed()) {
      const auto rows = reproduce_table1(parse_doubles("eps", t1_eps), parse_counts("m", t1_m),
                                         parse_variant(t1_variant), t1_T);
      emit(table1_csv(rows), t1_out);
      return kExitOk;
    }

    if (t2->parsed()) {
      std::function<std::vector<Table2Level>(double)> levels;
      if (!t2_levels.empty()) {
        const auto fixed = parse_levels(t2_levels);
        levels = [fixed](double) { return fixed; };
      } else {
        levels = [](double eps) {
          auto lv = table2_default_levels(eps);
          if (!lv) throw ConfigError("no published levels for this epsilon; pass --levels");
          return *lv;
        };
      }
      ErrorNorm norm;
      if (t2_norm == "literal") norm = ErrorNorm::Literal;
      else if (t2_norm == "rms") norm = ErrorNorm::Rms;
      else throw ConfigError("norm must be literal or rms");
      Table2Reference ref;
      ref.m = t2_ref_m;
      ref.dt = detail::parse_double("ref-dt", t2_ref_dt);
      emit(table2_csv(reproduce_table2(parse_doubles("eps", t2_eps), levels, ref, norm)), t2_out);
      return kExitOk;
    }

    if (ci->parsed()) {
      const double eps = detail::parse_double("epsilon", ci_eps);
      const auto r = compare_ice(eps, ci_m, detail::parse_double("dt", ci_dt),
                                 detail::parse_double("t-final", ci_T));
      ensure_dir(ci_out);
      write_file(std::filesystem::path(ci_out) / "solution.csv", compare_ice_csv(r));
      emit(compare_ice_tv_csv(eps, r), (std::filesystem::path(ci_out) / "tv.csv").string());
      return kExitOk;
    }

    if (sw->parsed()) {
      std::vector<SweepAxis> axes;
      for (const auto& a : sweep_axes) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) throw ConfigError("--axis expects key=v1;v2;...");
        SweepAxis ax{detail::trim(a.substr(0, eq)), {}};
        std::stringstream ss(a.substr(eq + 1));
        std::string v;
        while (std::getline(ss, v, ';')) ax.values.push_back(detail::trim(v));
        axes.push_back(std::move(ax));
      }
      ensure_dir(sweep_out);
      const auto runs = sweep(sweep_flags.entries(sw), axes, sweep_out);
      emit(sweep_csv(runs, axes), (std::filesystem::path(sweep_out) / "summary.csv").string());
      int rc = kExitOk;
      for (const auto& r : runs) rc = std::max(rc, r.outcome.exit_code);
      return rc;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
