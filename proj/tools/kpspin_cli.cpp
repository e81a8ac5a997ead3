// kpspin: command line front end for the kicked p-spin library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cli_args.hpp"
#include "kpspin/kpspin.hpp"
#include "report.hpp"

namespace kpspin::cli {
namespace {

// Options shared by most subcommands. Angles and ranges are kept as text
// and converted after parsing; validators reject bad literals up front so
// that the error names the flag.
struct CommonOptions {
  int p = 2;
  double k = 1.0;
  std::string alpha = "pi/2";
  std::uint64_t seed = default_root_seed;
  std::string format = "json";
  std::string out;
  bool no_timestamp = false;
  int threads = 0;
};

const CLI::Validator angle_literal(
    [](std::string& s) {
      try {
        parse_angle(s);
        return std::string();
      } catch (const std::exception& e) {
        return std::string(e.what());
      }
    },
    "ANGLE", "angle literal");

const CLI::Validator range_literal(
    [](std::string& s) {
      try {
        parse_range(s);
        return std::string();
      } catch (const std::exception& e) {
        return std::string(e.what());
      }
    },
    "MIN:MAX:N", "range literal");

const CLI::Validator int_list_literal(
    [](std::string& s) {
      try {
        parse_int_list(s);
        return std::string();
      } catch (const std::exception& e) {
        return std::string(e.what());
      }
    },
    "LIST", "integer list");

struct Command {
  CLI::App* app = nullptr;
  CommonOptions common;
  std::function<Report(const CommonOptions&)> run;
  bool uses_seed = false;
};

void add_output_options(CLI::App* app, CommonOptions& c) {
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app->add_option("--out", c.out, "Output file (default: stdout)");
  app->add_flag("--no-timestamp", c.no_timestamp, "Omit the timestamp from JSON provenance");
  app->add_option("--threads", c.threads, "Worker threads (default: KPSPIN_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
}

void add_model_options(CLI::App* app, CommonOptions& c, bool with_k = true, bool with_alpha = true) {
  app->add_option("--p", c.p, "Interaction order p")->check(CLI::Range(2, 64))->capture_default_str();
  if (with_k) app->add_option("--k", c.k, "Kick strength k")->check(CLI::NonNegativeNumber)->capture_default_str();
  if (with_alpha) app->add_option("--alpha", c.alpha, "Precession angle (e.g. pi/2)")->check(angle_literal)->capture_default_str();
}

ModelParams model(const CommonOptions& c) { return {c.p, c.k, parse_angle(c.alpha)}; }

ojson model_spec(const std::string& command, const CommonOptions& c) {
  ojson s = ojson::object();
  s["command"] = command;
  s["p"] = c.p;
  s["k"] = c.k;
  s["alpha"] = parse_angle(c.alpha);
  return s;
}

ojson nullable(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

int thread_count(const CommonOptions& c) { return c.threads > 0 ? c.threads : default_thread_count(); }

// ---------------------------------------------------------------- portrait

struct PortraitOptions {
  std::size_t trajectories = 50;
  std::size_t kicks = 500;
};

Report run_portrait(const CommonOptions& c, const PortraitOptions& o) {
  const ModelParams prm = model(c);
  Report r;
  r.spec = model_spec("portrait", c);
  r.spec["trajectories"] = o.trajectories;
  r.spec["kicks"] = o.kicks;
  r.columns = {"trajectory", "n", "x", "y", "z"};
  const auto starts = fibonacci_sphere(o.trajectories);
  for (std::size_t t = 0; t < starts.size(); ++t) {
    const auto traj = iterate(starts[t], prm, o.kicks);
    for (std::size_t n = 0; n < traj.points.size(); ++n) {
      const auto& x = traj.points[n];
      r.add_row({t, n, x.x(), x.y(), x.z()});
    }
  }
  return r;
}

// ------------------------------------------------------------ fixed-points

Report run_fixed_points(const CommonOptions& c, int grid) {
  const ModelParams prm = model(c);
  const auto search = find_fixed_points(prm, grid);
  Report r;
  r.spec = model_spec("fixed-points", c);
  r.spec["grid"] = grid;
  r.summary["count"] = search.fixed_points.size();
  r.summary["rejected"] = search.rejected.size();
  r.summary["degenerate_alpha"] = search.degenerate_alpha;
  r.columns = {"x", "y", "z", "kind", "trace", "resonance", "residual"};
  for (const auto& f : search.fixed_points) {
    r.add_row({f.point.x(), f.point.y(), f.point.z(), to_string(f.cls.kind), f.cls.trace,
               f.cls.resonance ? ojson(*f.cls.resonance) : ojson(nullptr), f.residual});
  }
  return r;
}

// ---------------------------------------------------------------- classify

Report run_classify(const CommonOptions& c, const std::vector<double>& point) {
  const ModelParams prm = model(c);
  const PhasePoint x(point.at(0), point.at(1), point.at(2));
  const auto cls = classify_fixed_point(x, prm);
  Report r;
  r.spec = model_spec("classify", c);
  r.spec["x"] = x.x();
  r.spec["y"] = x.y();
  r.spec["z"] = x.z();
  r.summary["kind"] = to_string(cls.kind);
  r.summary["trace"] = cls.trace;
  r.summary["resonance"] = cls.resonance ? ojson(*cls.resonance) : ojson(nullptr);
  r.summary["residual"] = fixed_point_residual(x, prm);
  r.columns = {"eigenvalue", "re", "im"};
  r.add_row({1, cls.eigenvalues.first.real(), cls.eigenvalues.first.imag()});
  r.add_row({2, cls.eigenvalues.second.real(), cls.eigenvalues.second.imag()});
  return r;
}

// --------------------------------------------------------------- lyapunov

struct LyapunovCliOptions {
  std::size_t steps = 1000000;
  std::size_t transient = 1000;
  std::size_t seeds = 0;
  bool history = false;
};

Report run_lyapunov(const CommonOptions& c, const LyapunovCliOptions& o) {
  const ModelParams prm = model(c);
  LyapunovOptions lo;
  lo.n_transient = o.transient;
  const LyapunovResult res =
      o.seeds > 0 ? lyapunov_max_over_seeds(prm, o.steps, o.seeds, lo) : lyapunov_qr(prm, seed_point(c.seed), o.steps, lo);
  const auto analytic = lyapunov_analytic(prm);
  Report r;
  r.spec = model_spec("lyapunov", c);
  r.spec["steps"] = o.steps;
  r.spec["transient"] = o.transient;
  r.spec["fibonacci_seeds"] = o.seeds;
  r.summary["value"] = res.value;
  r.summary["converged"] = res.converged;
  r.summary["seed_x"] = res.seed.x();
  r.summary["seed_y"] = res.seed.y();
  r.summary["seed_z"] = res.seed.z();
  r.summary["analytic"] = analytic.valid ? ojson(analytic.value) : ojson(nullptr);
  if (o.history) {
    r.columns = {"step", "estimate"};
    const std::size_t n = res.convergence_history.size();
    const std::size_t every = n > 0 ? o.steps / n : 0;
    for (std::size_t i = 0; i < n; ++i) r.add_row({(i + 1) * every, res.convergence_history[i]});
  }
  return r;
}

// ------------------------------------------------------------------- area

struct AreaCliOptions {
  std::size_t n_tot = 10000;
  double d_min = 6e-2;
  std::string t_max = "120:140";
};

Report run_area(const CommonOptions& c, const AreaCliOptions& o) {
  const ModelParams prm = model(c);
  const auto res = chaotic_area(prm, o.n_tot, o.d_min, parse_int_list(o.t_max), thread_count(c));
  Report r;
  r.spec = model_spec("area", c);
  r.spec["ntot"] = o.n_tot;
  r.spec["dmin"] = o.d_min;
  r.spec["tmax"] = o.t_max;
  r.summary["a_ch"] = res.a_ch;
  r.summary["a_reg"] = res.a_reg();
  r.summary["fraction"] = res.a_ch / (4.0 * pi);
  r.summary["n_escaped"] = res.n_escaped;
  return r;
}

// ------------------------------------------------------------- similarity

struct SimilarityCliOptions {
  double d_alpha = 5e-4;
  double d_k = 0.0;
  std::size_t n_tot = 1500;
  std::size_t kicks = 200;
  std::string alphas;
};

Report run_similarity(const CommonOptions& c, const SimilarityCliOptions& o) {
  const std::vector<double> alphas =
      o.alphas.empty() ? std::vector<double>{parse_angle(c.alpha)} : range_values(parse_range(o.alphas));
  Report r;
  r.spec = model_spec("similarity", c);
  if (!o.alphas.empty()) r.spec.erase("alpha");
  r.spec["dalpha"] = o.d_alpha;
  r.spec["dk"] = o.d_k;
  r.spec["ntot"] = o.n_tot;
  r.spec["kicks"] = o.kicks;
  if (!o.alphas.empty()) r.spec["alphas"] = o.alphas;
  r.columns = {"alpha", "s_bar", "n_used", "n_excluded"};
  double best = std::numeric_limits<double>::infinity();
  double best_alpha = std::numeric_limits<double>::quiet_NaN();
  for (double a : alphas) {
    const auto res = phase_space_similarity(ModelParams(c.p, c.k, a), o.d_alpha, o.d_k, o.n_tot, o.kicks, thread_count(c));
    r.add_row({a, nullable(res.s_bar), res.n_used, res.n_excluded});
    if (std::isfinite(res.s_bar) && res.s_bar < best) {
      best = res.s_bar;
      best_alpha = a;
    }
  }
  r.summary["min_alpha"] = nullable(best_alpha);
  r.summary["min_s_bar"] = nullable(best);
  return r;
}

// ------------------------------------------------------------------- scan

struct ScanCliOptions {
  std::string metric = "lyapunov";
  std::string ks;
  std::string alphas;
  ScanSettings settings;
  std::string t_max = "120:140";
  std::string checkpoint;
  std::string resume_from;
  std::size_t max_cells = 0;
};

Report scan_report(const ScanTable& t) {
  Report r;
  r.spec["command"] = "scan";
  r.spec["metric"] = to_string(t.spec.metric);
  r.spec["p"] = t.spec.p;
  r.spec["spec_digest"] = spec_digest(t.spec);
  r.summary["done"] = t.count(CellStatus::Done);
  r.summary["failed"] = t.count(CellStatus::Failed);
  r.summary["pending"] = t.count(CellStatus::Pending);
  r.columns = {"row", "col", "alpha", "k", "value", "status"};
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) {
      const auto s = t.status[t.index(i, j)];
      const char* st = s == CellStatus::Done ? "done" : s == CellStatus::Failed ? "failed" : "pending";
      r.add_row({i, j, t.alpha(i), t.k(j), nullable(t.value(i, j)), st});
    }
  return r;
}

Report run_scan_command(const CommonOptions& c, ScanCliOptions o) {
  ScanOptions opt;
  opt.parallelism = thread_count(c);
  opt.checkpoint_path = o.checkpoint;
  if (o.max_cells > 0) opt.max_cells = o.max_cells;

  ScanTable table = [&] {
    if (!o.resume_from.empty()) return resume(o.resume_from, opt);
    ScanSpec spec;
    spec.metric = parse_metric(o.metric);
    spec.p = c.p;
    const bool quantum = is_quantum(spec.metric);
    const std::size_t n = quantum ? 40 : 60;
    const Range kr = o.ks.empty() ? Range{0.0, 12.0, n} : parse_range(o.ks);
    const Range ar = o.alphas.empty() ? Range{0.0, pi, n} : parse_range(o.alphas);
    spec.k_range = {kr.min, kr.max, kr.count};
    spec.alpha_range = {ar.min, ar.max, ar.count};
    spec.settings = o.settings;
    spec.settings.t_max_list = parse_int_list(o.t_max);
    spec.root_seed = c.seed;
    return run_scan(spec, opt);
  }();
  for (const auto& f : table.failures) {
    nlohmann::json rec = {{"cell_failure", {{"row", f.row}, {"col", f.col}, {"message", f.message}}}};
    std::cerr << rec.dump() << "\n";
  }
  return scan_report(table);
}

// --------------------------------------------------------------- spectrum

struct SpectrumCliOptions {
  int n_s = 512;
  bool full = false;
  bool phases = false;
  std::string dump;
};

Report run_spectrum(const CommonOptions& c, const SpectrumCliOptions& o) {
  const ModelParams prm = model(c);
  const SpinRepresentation rep(o.n_s);
  const auto jy = jy_eigenbasis(rep);
  const auto stats = spectrum_statistics(prm, rep, jy, !o.full);
  Report r;
  r.spec = model_spec("spectrum", c);
  r.spec["ns"] = o.n_s;
  r.spec["full_spectrum"] = o.full;
  r.summary["r_bar"] = stats.ratios.r_bar;
  r.summary["gamma"] = stats.gamma;
  r.summary["n_ratios"] = stats.ratios.ratios.size();
  r.summary["n_degenerate_excluded"] = stats.ratios.excluded_degenerate;
  r.summary["n_sectors"] = stats.n_sectors;
  if (o.phases || !o.dump.empty()) {
    const auto u = floquet_operator(prm, rep, jy);
    if (!o.dump.empty()) {
      dump::write_spectrum(o.dump, prm, rep, eigensystem(u.matrix));
    }
    if (o.phases) {
      r.columns = {"index", "phase"};
      const auto ph = eigenphases(u.matrix);
      for (Eigen::Index i = 0; i < ph.size(); ++i) r.add_row({i, ph(i)});
    }
  }
  return r;
}

// -------------------------------------------------------------- ipr-delta

Report run_ipr_delta(const CommonOptions& c, int n_s) {
  const ModelParams prm = model(c);
  const SpinRepresentation rep(n_s);
  const auto jy = jy_eigenbasis(rep);
  const double delta = floquet_delta(prm, rep, jy);
  Report r;
  r.spec = model_spec("ipr-delta", c);
  r.spec["ns"] = n_s;
  r.summary["delta"] = delta;
  r.summary["delta_coe"] = coe_delta(rep.dim());
  r.summary["mean_ipr"] = delta * coe_delta(rep.dim());
  return r;
}

// ------------------------------------------------------------------- otoc

struct OtocCliOptions {
  int n_s = 512;
  int n_max = 60;
  int coe_samples = default_coe_samples;
  FitOptions fit;
};

Report run_otoc(const CommonOptions& c, const OtocCliOptions& o) {
  const ModelParams prm = model(c);
  const SpinRepresentation rep(o.n_s);
  auto series = otoc_series(prm, rep, o.n_max);
  if (o.coe_samples > 0) series.c_coe = coe_normalization(rep, o.coe_samples, c.seed, false).c_coe;
  const auto fit = fit_quantum_lyapunov(series, o.fit);
  Report r;
  r.spec = model_spec("otoc", c);
  r.spec["ns"] = o.n_s;
  r.spec["nmax"] = o.n_max;
  r.spec["coe_samples"] = o.coe_samples;
  r.summary["c_coe"] = nullable(series.c_coe);
  r.summary["has_window"] = fit.has_window;
  r.summary["lambda_q"] = fit.has_window ? ojson(fit.lambda_q) : ojson(nullptr);
  r.summary["n_lo"] = fit.has_window ? ojson(fit.n_lo) : ojson(nullptr);
  r.summary["n_hi"] = fit.has_window ? ojson(fit.n_hi) : ojson(nullptr);
  r.summary["residual"] = fit.has_window ? ojson(fit.residual) : ojson(nullptr);
  r.columns = {"n", "c", "c_normalized"};
  for (std::size_t i = 0; i < series.n.size(); ++i)
    r.add_row({series.n[i], series.c[i], nullable(series.c[i] / series.c_coe)});
  return r;
}

void print_error(const std::string& type, const std::string& message, const std::string& command) {
  nlohmann::json rec = {{"error", {{"type", type}, {"message", message}, {"command", command}}}};
  std::cerr << rec.dump() << "\n";
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Kicked p-spin classical and quantum chaos diagnostics"};
  app.set_version_flag("--version", std::string(kpspin::version));
  app.set_config("--config", "", "TOML config file; command line flags take precedence");
  app.require_subcommand(1);

  std::map<std::string, std::unique_ptr<Command>> commands;
  auto add = [&](const std::string& name, const std::string& help) -> Command& {
    auto cmd = std::make_unique<Command>();
    cmd->app = app.add_subcommand(name, help);
    auto& ref = *cmd;
    commands[name] = std::move(cmd);
    return ref;
  };
  auto seed_option = [](Command& cmd) {
    cmd.uses_seed = true;
    cmd.app->add_option("--seed", cmd.common.seed, "Root seed")->capture_default_str();
  };

  PortraitOptions portrait;
  {
    auto& cmd = add("portrait", "Trajectories from a Fibonacci grid of initial conditions");
    add_model_options(cmd.app, cmd.common);
    add_output_options(cmd.app, cmd.common);
    cmd.app->add_option("--trajectories", portrait.trajectories, "Number of trajectories")->check(CLI::PositiveNumber);
    cmd.app->add_option("--kicks", portrait.kicks, "Kicks per trajectory")->check(CLI::PositiveNumber);
    cmd.run = [&](const CommonOptions& c) { return run_portrait(c, portrait); };
  }

  int grid = 2000;
  {
    auto& cmd = add("fixed-points", "Fixed points of the classical map with stability");
    add_model_options(cmd.app, cmd.common);
    add_output_options(cmd.app, cmd.common);
    cmd.app->add_option("--grid", grid, "Root bracketing grid resolution")->check(CLI::Range(100, 10000000));
    cmd.run = [&](const CommonOptions& c) { return run_fixed_points(c, grid); };
  }

  std::vector<double> point;
  {
    auto& cmd = add("classify", "Stability class of a fixed point");
    add_model_options(cmd.app, cmd.common);
    add_output_options(cmd.app, cmd.common);
    cmd.app->add_option("--point", point, "Fixed point X,Y,Z")->required()->expected(3)->delimiter(',');
    cmd.run = [&](const CommonOptions& c) { return run_classify(c, point); };
  }

  LyapunovCliOptions lyap;
  {
    auto& cmd = add("lyapunov", "Largest Lyapunov exponent");
    add_model_options(cmd.app, cmd.common);
    add_output_options(cmd.app, cmd.common);
    seed_option(cmd);
    cmd.app->add_option("--steps", lyap.steps, "Accumulated steps")->check(CLI::Range(10000ul, 1000000000000ul));
    cmd.app->add_option("--transient", lyap.transient, "Discarded transient steps");
    cmd.app->add_option("--seeds", lyap.seeds, "Maximum over this many Fibonacci seeds instead of one random seed");
    cmd.app->add_flag("--history", lyap.history, "Emit the running estimate");
    cmd.run = [&](const CommonOptions& c) { return run_lyapunov(c, lyap); };
  }

  AreaCliOptions area;
  {
    auto& cmd = add("area", "Chaotic-sea area from Poincare recurrences");
    add_model_options(cmd.app, cmd.common);
    add_output_options(cmd.app, cmd.common);
    cmd.app->add_option("--ntot", area.n_tot, "Initial conditions")->check(CLI::Range(1000ul, 100000000ul));
    cmd.app->add_option("--dmin", area.d_min, "Recurrence radius")->check(CLI::PositiveNumber);
    cmd.app->add_option("--tmax", area.t_max, "Recurrence horizons, a:b or a,b,c")->check(int_list_literal);
    cmd.run = [&](const CommonOptions& c) { return run_area(c, area); };
  }

  SimilarityCliOptions sim;
  {
    auto& cmd = add("similarity", "Phase-portrait similarity under a parameter change");
    add_model_options(cmd.app, cmd.common);
    add_output_options(cmd.app, cmd.common);
    cmd.app->add_option("--dalpha", sim.d_alpha, "Change in alpha");
    cmd.app->add_option("--dk", sim.d_k, "Change in k");
    cmd.app->add_option("--ntot", sim.n_tot, "Initial conditions")->check(CLI::Range(100ul, 100000000ul));
    cmd.app->add_option("--kicks", sim.kicks, "Kicks per trajectory")->check(CLI::Range(10ul, 100000000ul));
    cmd.app->add_option("--alphas", sim.alphas, "Alpha sweep min:max:n (overrides --alpha)")->check(range_literal);
    cmd.run = [&](const CommonOptions& c) { return run_similarity(c, sim); };
  }

  ScanCliOptions scan;
  {
    auto& cmd = add("scan", "Evaluate a metric over a (k, alpha) grid");
    add_model_options(cmd.app, cmd.common, false, false);
    add_output_options(cmd.app, cmd.common);
    seed_option(cmd);
    auto& s = scan.settings;
    cmd.app->add_option("--metric", scan.metric, "Metric")
        ->check(CLI::IsMember({"lyapunov", "area", "similarity", "gamma", "delta", "lambda_q"}))
        ->capture_default_str();
    cmd.app->add_option("--ks", scan.ks, "k axis min:max:n (default 0:12:60, quantum 0:12:40)")->check(range_literal);
    cmd.app->add_option("--alphas", scan.alphas, "alpha axis min:max:n (default 0:pi:60, quantum 0:pi:40)")
        ->check(range_literal);
    cmd.app->add_option("--steps", s.n_steps, "Lyapunov steps")->capture_default_str();
    cmd.app->add_option("--seeds", s.n_seeds, "Lyapunov: maximum over this many random seeds per cell")
        ->capture_default_str();
    cmd.app->add_option("--ntot", s.n_tot, "Initial conditions (area, similarity)")->capture_default_str();
    cmd.app->add_option("--dmin", s.d_min, "Recurrence radius")->capture_default_str();
    cmd.app->add_option("--tmax", scan.t_max, "Recurrence horizons")->check(int_list_literal)->capture_default_str();
    cmd.app->add_option("--dalpha", s.d_alpha, "Similarity change in alpha")->capture_default_str();
    cmd.app->add_option("--dk", s.d_k, "Similarity change in k")->capture_default_str();
    cmd.app->add_option("--kicks", s.n_kicks, "Similarity kicks")->capture_default_str();
    cmd.app->add_option("--ns", s.n_s, "N_s for quantum metrics")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.app->add_option("--nmax", s.n_max, "OTOC steps for lambda_q")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.app->add_option("--checkpoint", scan.checkpoint, "Checkpoint file, rewritten as cells complete");
    cmd.app->add_option("--resume", scan.resume_from, "Resume from a checkpoint (grid and metric come from the file)");
    cmd.app->add_option("--max-cells", scan.max_cells, "Stop after evaluating this many cells");
    cmd.run = [&](const CommonOptions& c) { return run_scan_command(c, scan); };
  }

  SpectrumCliOptions spec_opts;
  {
    auto& cmd = add("spectrum", "Floquet eigenphase statistics (r-bar and Gamma)");
    add_model_options(cmd.app, cmd.common);
    add_output_options(cmd.app, cmd.common);
    cmd.app->add_option("--ns", spec_opts.n_s, "N_s (dimension N_s + 1)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.app->add_flag("--full", spec_opts.full, "Use the full spectrum without symmetry sectors");
    cmd.app->add_flag("--phases", spec_opts.phases, "Emit the eigenphases");
    cmd.app->add_option("--dump", spec_opts.dump, "Write eigenphases and eigenvectors to a binary file");
    cmd.run = [&](const CommonOptions& c) { return run_spectrum(c, spec_opts); };
  }

  int ipr_ns = 512;
  {
    auto& cmd = add("ipr-delta", "Floquet eigenvector localization delta in the Jy basis");
    add_model_options(cmd.app, cmd.common);
    add_output_options(cmd.app, cmd.common);
    cmd.app->add_option("--ns", ipr_ns, "N_s")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.run = [&](const CommonOptions& c) { return run_ipr_delta(c, ipr_ns); };
  }

  OtocCliOptions otoc;
  {
    auto& cmd = add("otoc", "Square-commutator growth of Jz and the quantum Lyapunov exponent");
    add_model_options(cmd.app, cmd.common);
    add_output_options(cmd.app, cmd.common);
    seed_option(cmd);
    cmd.app->add_option("--ns", otoc.n_s, "N_s")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.app->add_option("--nmax", otoc.n_max, "Number of kicks")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.app->add_option("--coe-samples", otoc.coe_samples, "COE samples for normalization (0: skip)")
        ->check(CLI::Validator(
            [](std::string& s) {
              int n = -1;
              if (!CLI::detail::lexical_cast(s, n) || (n != 0 && n < 10)) return std::string("must be 0 or >= 10");
              return std::string();
            },
            "N"))
        ->capture_default_str();
    cmd.app->add_option("--floor-multiplier", otoc.fit.floor_multiplier, "Fit window floor multiplier");
    cmd.app->add_option("--saturation-fraction", otoc.fit.saturation_fraction, "Fit window saturation fraction");
    cmd.run = [&](const CommonOptions& c) { return run_otoc(c, otoc); };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto selected = app.get_subcommands();
  const std::string name = selected.front()->get_name();
  Command& cmd = *commands.at(name);
  try {
    lapack::pin_blas_threads(1);
    const Report report = cmd.run(cmd.common);
    Provenance prov{kpspin::version, std::nullopt, !cmd.common.no_timestamp};
    if (cmd.uses_seed) prov.seed = cmd.common.seed;
    emit(cmd.common.format == "csv" ? encode_csv(report) : encode_json(report, prov), cmd.common.out);
  } catch (const ScanFileError& e) {
    print_error(dynamic_cast<const VersionMismatch*>(&e) ? "version_mismatch" : "corrupt_file", e.what(), name);
    return 1;
  } catch (const std::invalid_argument& e) {
    print_error("invalid_argument", e.what(), name);
    return 1;
  } catch (const std::exception& e) {
    print_error("runtime_error", e.what(), name);
    return 1;
  }
  return 0;
}

}  // namespace kpspin::cli

int main(int argc, char** argv) { return kpspin::cli::run(argc, argv); }
