#pragma once

// Experiment orchestration: single runs, the two table reproductions, the ICE
// comparison and parameter sweeps. Requires OpenSSL libcrypto (SHA-1 content
// hashes in the run manifest) and nlohmann/json.

#include <allspeed/config.hpp>
#include <allspeed/diagnostics.hpp>
#include <allspeed/integrate.hpp>
#include <allspeed/presets.hpp>
#include <allspeed/scheme2d.hpp>

#include <json.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace allspeed {

class IoError : public Error {
public:
  using Error::Error;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitIo = 4 };

// ---------------------------------------------------------------------------
// Files

/// SHA-1 of "blob <size>\0<content>", the object id git assigns to a file.
inline std::string git_blob_sha1(const std::string& content) {
  const std::string data = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw IoError("SHA-1 digest failed");
  std::ostringstream o;
  for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return o.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << content;
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

namespace detail {
inline std::ostringstream csv_stream() {
  std::ostringstream o;
  o << std::setprecision(17);
  return o;
}
} // namespace detail

/// Header `x,rho,q`, one row per cell.
inline std::string snapshot_csv(const FluidState1D& s) {
  auto o = detail::csv_stream();
  o << "x,rho,q\n";
  for (std::size_t j = 0; j < s.size(); ++j)
    o << s.grid().center(j) << ',' << s.rho(j) << ',' << s.q(j) << '\n';
  return o.str();
}

/// Header `x,y,rho,q1,q2`, row-major over (i, j).
inline std::string snapshot_csv(const FluidState2D& s) {
  auto o = detail::csv_stream();
  o << "x,y,rho,q1,q2\n";
  const Grid2D& g = s.grid();
  for (std::size_t i = 0; i < g.m1(); ++i)
    for (std::size_t j = 0; j < g.m2(); ++j) {
      const std::size_t k = i * g.m2() + j;
      o << g.x_center(i) << ',' << g.y_center(j) << ',' << s.rho()[k] << ',' << s.q1()[k] << ','
        << s.q2()[k] << '\n';
    }
  return o.str();
}

namespace detail {

inline std::vector<std::vector<double>> read_numeric_csv(const std::string& text,
                                                        const std::string& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != header)
    throw ConfigError("initial CSV must start with header '" + header + "'");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double("initial_csv", trim(cell)));
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace detail

/// Initial 1D state from a snapshot-schema CSV on [a, b]; the x column is
/// checked against the cell centres.
inline FluidState1D read_snapshot_1d(const std::string& text, double a, double b) {
  const auto rows = detail::read_numeric_csv(text, "x,rho,q");
  if (rows.empty()) throw ConfigError("initial CSV has no rows");
  const Grid1D g(a, b, rows.size());
  Field rho, q;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != 3) throw ConfigError("initial CSV row " + std::to_string(j + 1) + " needs 3 columns");
    if (std::abs(rows[j][0] - g.center(j)) > 1e-9 * (b - a))
      throw ConfigError("initial CSV row " + std::to_string(j + 1) + " is not at cell centre");
    rho.push_back(rows[j][1]);
    q.push_back(rows[j][2]);
  }
  try {
    return {g, std::move(rho), std::move(q)};
  } catch (const InvalidStateError& e) {
    throw ConfigError(std::string("initial CSV: ") + e.what());
  }
}

inline FluidState2D read_snapshot_2d(const std::string& text, std::size_t m1, std::size_t m2) {
  const auto rows = detail::read_numeric_csv(text, "x,y,rho,q1,q2");
  if (rows.size() != m1 * m2) throw ConfigError("initial CSV must have m1*m2 rows");
  const Grid2D g(m1, m2);
  Field rho, q1, q2;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != 5) throw ConfigError("initial CSV row " + std::to_string(k + 1) + " needs 5 columns");
    rho.push_back(rows[k][2]);
    q1.push_back(rows[k][3]);
    q2.push_back(rows[k][4]);
  }
  try {
    return {g, std::move(rho), std::move(q1), std::move(q2)};
  } catch (const InvalidStateError& e) {
    throw ConfigError(std::string("initial CSV: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Single run

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::optional<std::size_t> failed_step;
  std::size_t steps = 0;
  std::vector<std::string> files; ///< written, relative to output_dir
};

namespace detail {

inline std::string step_log_header() {
  return "step,time,dt,max_wave_speed,mass_total,momentum_total,momentum2_total,"
         "consistency_residual,newton_iters,linear_iters\n";
}

inline void log_step(std::ostringstream& o, std::size_t n, double t, const StepReport& r) {
  o << n << ',' << t << ',' << r.dt_used << ',' << r.max_wave_speed << ',' << r.mass_total << ','
    << r.momentum_total << ',' << r.momentum2_total << ',' << r.consistency_residual << ','
    << r.newton_iters << ',' << r.linear_iters << '\n';
}

inline nlohmann::ordered_json manifest_json(const RunConfig& c, const RunOutcome& out,
                                            const std::filesystem::path& dir) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : config_echo(c)) cfg[k] = v;
  j["config"] = cfg;
  j["status"] = out.exit_code == kExitOk ? "ok" : "failed";
  j["exit_code"] = out.exit_code;
  if (!out.message.empty()) j["message"] = out.message;
  if (out.failed_step) j["failed_step"] = *out.failed_step;
  j["steps"] = out.steps;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& f : out.files)
    files.push_back({{"file", f}, {"git_blob_sha1", git_blob_sha1(read_file(dir / f))}});
  j["outputs"] = files;
  return j;
}

inline std::string snapshot_name(std::size_t k) {
  std::ostringstream o;
  o << "snapshot_" << std::setw(3) << std::setfill('0') << k << ".csv";
  return o.str();
}

template <class State>
void write_outputs(const std::filesystem::path& dir, const std::vector<Snapshot<State>>& snaps,
                   const std::string& step_log, RunOutcome& out) {
  std::string index = "file,time\n";
  auto o = csv_stream();
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const std::string name = snapshot_name(k);
    write_file(dir / name, snapshot_csv(snaps[k].state));
    out.files.push_back(name);
    o << name << ',' << snaps[k].time << '\n';
  }
  write_file(dir / "snapshots.csv", index + o.str());
  out.files.push_back("snapshots.csv");
  write_file(dir / "steps.csv", step_log);
  out.files.push_back("steps.csv");
}

} // namespace detail

inline FluidState1D initial_state_1d(const RunConfig& c) {
  switch (c.preset) {
  case Preset::Example1: return example1_initial(c.m, c.epsilon);
  case Preset::Example2: return example2_initial(c.m, c.epsilon);
  case Preset::Custom: return read_snapshot_1d(read_file(c.initial_csv), c.domain_a, c.domain_b);
  case Preset::Example3: break;
  }
  throw ConfigError("preset is not one-dimensional");
}

inline FluidState2D initial_state_2d(const RunConfig& c) {
  if (c.preset == Preset::Example3) return example3_initial(c.m1, c.m2, c.epsilon);
  if (c.preset == Preset::Custom) return read_snapshot_2d(read_file(c.initial_csv), c.m1, c.m2);
  throw ConfigError("preset is not two-dimensional");
}

/// Integrates the configured problem, writing snapshot CSVs, a per-step log
/// and manifest.json into output_dir. Never throws; the outcome carries the
/// exit code. Artifacts up to the failure are written for numerical failures.
inline RunOutcome run(const RunConfig& c) {
  RunOutcome out;
  const std::filesystem::path dir = c.output_dir;
  try {
    validate_config(c);
    ensure_dir(dir);
    auto log = detail::csv_stream();
    log << detail::step_log_header();
    IntegrateOptions opt;
    opt.snapshot_times = c.effective_snapshots();
    opt.on_step = [&](std::size_t n, double t, const StepReport& r) { detail::log_step(log, n, t, r); };
    const SchemeParams params = c.scheme_params();

    auto finish = [&](auto&& integrate_fn) {
      try {
        auto res = integrate_fn();
        out.steps = res.steps;
        detail::write_outputs(dir, res.snapshots, log.str(), out);
      } catch (const NumericalFailure& f) {
        out.exit_code = kExitNumerical;
        out.message = f.what();
        out.failed_step = f.step();
        out.steps = f.step() ? *f.step() - 1 : 0;
        write_file(dir / "steps.csv", log.str());
        out.files.push_back("steps.csv");
      }
    };
    if (c.dimension == 1) {
      const auto s0 = initial_state_1d(c);
      const Stepper1D stepper{c.stepper, c.variant};
      finish([&] { return integrate_1d(s0, c.eos(), params, stepper, c.t_final, opt); });
    } else {
      const auto s0 = initial_state_2d(c);
      finish([&] { return integrate_2d(s0, c.eos(), params, c.stencil, c.t_final, opt); });
    }
    write_file(dir / "manifest.json", detail::manifest_json(c, out, dir).dump(2) + "\n");
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfig;
    out.message = e.what();
  } catch (const IoError& e) {
    out.exit_code = kExitIo;
    out.message = e.what();
  } catch (const NumericalFailure& e) {
    out.exit_code = kExitNumerical;
    out.message = e.what();
  } catch (const Error& e) {
    // Remaining library errors come from invalid inputs (state or grid).
    out.exit_code = kExitConfig;
    out.message = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Table reproductions

struct Table1Row {
  double epsilon;
  double max_lambda;
  double dx;
  double dt;
  double courant; ///< max_lambda * dt / dx
};

/// Largest stable dt of the AP scheme on Example 1 to T for each (eps, M),
/// scanned over [dx/10, dx].
inline std::vector<Table1Row> reproduce_table1(const std::vector<double>& eps_list,
                                               const std::vector<std::size_t>& m_list,
                                               SchemeVariant variant, double T = 0.1) {
  std::vector<Table1Row> rows;
  for (double eps : eps_list)
    for (std::size_t m : m_list) {
      SchemeParams p;
      p.epsilon = eps;
      p.alpha = 1.0;
      const double dx = 1.0 / static_cast<double>(m);
      const auto scan = max_stable_dt_scan(example1_initial(m, eps), example1_eos(), p,
                                           Stepper1D{StepperKind::AP, variant}, T, dx / 10.0, dx);
      rows.push_back({eps, scan.max_wave_speed, dx, scan.dt, scan.max_wave_speed * scan.dt / dx});
    }
  return rows;
}

inline std::string table1_csv(const std::vector<Table1Row>& rows) {
  auto o = detail::csv_stream();
  o << "epsilon,max_lambda,dx,dt,inv_dt,courant\n";
  for (const auto& r : rows)
    o << r.epsilon << ',' << r.max_lambda << ',' << r.dx << ',' << r.dt << ',' << 1.0 / r.dt << ','
      << r.courant << '\n';
  return o.str();
}

struct Table2Level {
  std::size_t m;
  double dt;
};

/// The mesh pairs of the published error table; other eps need explicit levels.
inline std::optional<std::vector<Table2Level>> table2_default_levels(double eps) {
  if (eps == 0.8)
    return std::vector<Table2Level>{{20, 1.0 / 180}, {40, 1.0 / 360}, {80, 1.0 / 720},
                                    {160, 1.0 / 1440}, {320, 1.0 / 2880}, {320, 1.0 / 12800}};
  if (eps == 0.05)
    return std::vector<Table2Level>{{20, 1.0 / 70}, {40, 1.0 / 140}, {80, 1.0 / 280},
                                    {160, 1.0 / 560}, {320, 1.0 / 1120}, {320, 1.0 / 12800}};
  return std::nullopt;
}

struct Table2Row {
  double epsilon;
  double dx;
  double dt;
  double e_rho;
  double e_q;
  std::optional<double> ratio_rho; ///< against the previous row when dx halved
  std::optional<double> ratio_q;
};

struct Table2Reference {
  std::size_t m = 1280;
  double dt = 1.0 / 128000;
  double T = 0.1;
};

/// Errors of the LD scheme (alpha = 1) against an explicit LLF reference on
/// Example 1 at time T. `levels` supplies the (M, dt) pairs for every eps.
inline std::vector<Table2Row> reproduce_table2(
    const std::vector<double>& eps_list,
    const std::function<std::vector<Table2Level>(double)>& levels, const Table2Reference& ref = {},
    ErrorNorm norm = ErrorNorm::Literal) {
  std::vector<Table2Row> rows;
  for (double eps : eps_list) {
    SchemeParams p;
    p.epsilon = eps;
    p.alpha = 1.0;
    p.dt_policy = FixedDt{ref.dt};
    const auto reference = integrate_1d(example1_initial(ref.m, eps), example1_eos(), p,
                                        Stepper1D{StepperKind::ExplicitLLF}, ref.T)
                               .state;
    std::optional<Table2Row> prev;
    for (const auto& lv : levels(eps)) {
      p.dt_policy = FixedDt{lv.dt};
      const auto s = integrate_1d(example1_initial(lv.m, eps), example1_eos(), p,
                                  Stepper1D{StepperKind::AP, SchemeVariant::LD}, ref.T)
                         .state;
      const auto e = relative_l2_error(s, reference, norm);
      Table2Row row{eps, 1.0 / static_cast<double>(lv.m), lv.dt, e.e_rho, e.e_q, {}, {}};
      if (prev && std::abs(prev->dx - 2.0 * row.dx) <= 1e-12) {
        row.ratio_rho = prev->e_rho / row.e_rho;
        row.ratio_q = prev->e_q / row.e_q;
      }
      rows.push_back(row);
      prev = row;
    }
  }
  return rows;
}

inline std::string table2_csv(const std::vector<Table2Row>& rows) {
  auto o = detail::csv_stream();
  o << "epsilon,dx,dt,e_rho,ratio_rho,e_q,ratio_q\n";
  for (const auto& r : rows) {
    o << r.epsilon << ',' << r.dx << ',' << r.dt << ',' << r.e_rho << ',';
    if (r.ratio_rho) o << *r.ratio_rho;
    o << ',' << r.e_q << ',';
    if (r.ratio_q) o << *r.ratio_q;
    o << '\n';
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// ICE comparison

struct IceComparison {
  FluidState1D ap;
  FluidState1D ice;
  double tv_rho_ap;
  double tv_rho_ice;
  double tv_q_ap;
  double tv_q_ice;
};

/// AP (alpha = 1, LD) and ICE on Example 1 with M cells and fixed dt to T.
inline IceComparison compare_ice(double epsilon, std::size_t m, double dt, double T) {
  SchemeParams p;
  p.epsilon = epsilon;
  p.alpha = 1.0;
  p.dt_policy = FixedDt{dt};
  const auto s0 = example1_initial(m, epsilon);
  auto ap = integrate_1d(s0, example1_eos(), p, Stepper1D{StepperKind::AP, SchemeVariant::LD}, T).state;
  auto ice = integrate_1d(s0, example1_eos(), p, Stepper1D{StepperKind::ICE}, T).state;
  const double a = total_variation(ap.rho()), b = total_variation(ice.rho());
  const double c = total_variation(ap.q()), d = total_variation(ice.q());
  return {std::move(ap), std::move(ice), a, b, c, d};
}

inline std::string compare_ice_csv(const IceComparison& r) {
  auto o = detail::csv_stream();
  o << "x,rho_ap,q_ap,rho_ice,q_ice\n";
  for (std::size_t j = 0; j < r.ap.size(); ++j)
    o << r.ap.grid().center(j) << ',' << r.ap.rho(j) << ',' << r.ap.q(j) << ',' << r.ice.rho(j) << ','
      << r.ice.q(j) << '\n';
  return o.str();
}

inline std::string compare_ice_tv_csv(double epsilon, const IceComparison& r) {
  auto o = detail::csv_stream();
  o << "epsilon,tv_rho_ap,tv_rho_ice,tv_q_ap,tv_q_ice\n";
  o << epsilon << ',' << r.tv_rho_ap << ',' << r.tv_rho_ice << ',' << r.tv_q_ap << ',' << r.tv_q_ice << '\n';
  return o.str();
}

// ---------------------------------------------------------------------------
// Sweeps

/// Width of the sweep worker pool: ALLSPEED_SWEEP_JOBS when set to a positive
/// integer, else the number of hardware threads.
inline unsigned sweep_jobs() {
  if (const char* v = std::getenv("ALLSPEED_SWEEP_JOBS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

struct SweepRun {
  ConfigEntries overrides;
  RunOutcome outcome;
};

/// Runs the cartesian product of `axes` over `base`, each in output_dir/run_NNN.
/// Runs are independent and execute concurrently on `jobs` threads.
inline std::vector<SweepRun> sweep(const ConfigEntries& base, const std::vector<SweepAxis>& axes,
                                   const std::string& output_dir, unsigned jobs = sweep_jobs()) {
  std::vector<ConfigEntries> combos{{}};
  for (const auto& ax : axes) {
    if (ax.values.empty()) throw ConfigError("sweep axis '" + ax.key + "' has no values");
    std::vector<ConfigEntries> next;
    for (const auto& c : combos)
      for (const auto& v : ax.values) {
        auto e = c;
        e.emplace_back(ax.key, v);
        next.push_back(std::move(e));
      }
    combos = std::move(next);
  }
  std::vector<SweepRun> runs(combos.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < combos.size(); k = next++) {
      runs[k].overrides = combos[k];
      std::ostringstream name;
      name << "run_" << std::setw(3) << std::setfill('0') << k;
      ConfigEntries e = base;
      e.insert(e.end(), combos[k].begin(), combos[k].end());
      e.emplace_back("output_dir", (std::filesystem::path(output_dir) / name.str()).string());
      try {
        runs[k].outcome = run(build_config(e));
      } catch (const ConfigError& err) {
        runs[k].outcome.exit_code = kExitConfig;
        runs[k].outcome.message = err.what();
      }
    }
  };
  const unsigned width = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(combos.size())));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < width; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return runs;
}

inline std::string sweep_csv(const std::vector<SweepRun>& runs, const std::vector<SweepAxis>& axes) {
  std::ostringstream o;
  o << "run";
  for (const auto& ax : axes) o << ',' << ax.key;
  o << ",exit_code,steps,message\n";
  for (std::size_t k = 0; k < runs.size(); ++k) {
    o << "run_" << std::setw(3) << std::setfill('0') << k << std::setfill(' ');
    for (const auto& [key, v] : runs[k].overrides) o << ',' << v;
    std::string msg = runs[k].outcome.message;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    o << ',' << runs[k].outcome.exit_code << ',' << runs[k].outcome.steps << ",\"" << msg << "\"\n";
  }
  return o.str();
}

} // namespace allspeed
