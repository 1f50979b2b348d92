// fracgb: command-line front end.
//
//   fracgb bound    --kind mixed-closed --alpha 0.5 --a const:1 --b const:1 --g const:1 --T 1
//   fracgb simulate --drift linear:0.1 --sigma2 linear:0.2 --paths 10000 --seed 7
//   fracgb picard   --drift affine:0.2,-0.5 --sigma1 linear:0.3 --offsets 5,-5
//   fracgb fpk      --sigma2 const:0.5 --x-min -3 --x-max 5 --cells 400 --steps 1280
//   fracgb verify   [--battery default|quick|empty]
//
// Every run writes its data files plus manifest.json into --out; passing the
// manifest back through --config regenerates the data files byte for byte.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fracgb/fracgb.hpp"
#include "json.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fracgb;
using fracgb::cli::RunConfig;

namespace {

constexpr int kSchemeVersion = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<double> row) { rows_.push_back(std::move(row)); }

  void write(const fs::path& file, const std::string& format) const {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    if (format == "json") {
      json j = json::object();
      for (std::size_t c = 0; c < columns_.size(); ++c) {
        json col = json::array();
        for (const auto& r : rows_) col.push_back(r[c]);
        j[columns_[c]] = std::move(col);
      }
      out << j.dump(1) << '\n';
      return;
    }
    for (std::size_t c = 0; c < columns_.size(); ++c) out << (c ? "," : "") << columns_[c];
    out << '\n';
    for (const auto& r : rows_) {
      for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << num(r[c]);
      out << '\n';
    }
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

class Run {
 public:
  explicit Run(const RunConfig& cfg) : cfg_(cfg), dir_(cfg.out) { fs::create_directories(dir_); }

  void emit(const std::string& stem, const Table& t) {
    const std::string name = stem + (cfg_.format == "json" ? ".json" : ".csv");
    t.write(dir_ / name, cfg_.format);
    outputs_.push_back(name);
  }

  void emit_lines(const std::string& name, const std::vector<std::string>& lines) {
    std::ofstream out(dir_ / name, std::ios::binary);
    for (const auto& l : lines) out << l << '\n';
    outputs_.push_back(name);
  }

  ~Run() {
    json m;
    m["tool"] = "fracgb";
    m["scheme_version"] = kSchemeVersion;
    m["command"] = cfg_.command;
    m["config"] = cfg_;
    m["outputs"] = outputs_;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << m.dump(2) << '\n';
  }

 private:
  const RunConfig& cfg_;
  fs::path dir_;
  std::vector<std::string> outputs_;
};

TimeGrid time_grid(const RunConfig& c) { return TimeGrid(c.T, c.steps); }

CoeffSpec coeffs(const RunConfig& c) {
  return CoeffSpec::make(Family::parse(c.drift), Family::parse(c.sigma1), Family::parse(c.sigma2));
}

void validate(const RunConfig& c) {
  if (c.format != "csv" && c.format != "json") throw UsageError("--format must be csv or json");
  if (c.steps < 1) throw UsageError("--steps must be positive");
  AlphaOrder{c.alpha};
  TimeGrid{c.T, c.steps};
}

Table curve_table(const BoundCurve& bc) {
  Table t({"t", "value", "tail"});
  for (std::size_t j = 0; j < bc.values.size(); ++j) t.add({bc.grid.node(j), bc.values[j], bc.tail_bound[j]});
  return t;
}

int cmd_bound(const RunConfig& c) {
  const TimeGrid grid = time_grid(c);
  const AlphaOrder alpha(c.alpha);
  MixedBoundParams p;
  p.alpha = alpha;
  p.series_tol = c.series_tol;
  p.n_max = c.n_max;
  auto cap = [&](const SampledFn& b, const SampledFn& g) {
    if (c.m_cap > 0.0) return c.m_cap;
    double m = 0.0;
    for (double v : b.values()) m = std::max(m, v);
    for (double v : g.values()) m = std::max(m, v);
    return m > 0.0 ? m : 1.0;
  };
  BoundCurve curve{grid, {}, {}, {}};
  if (c.kind == "classical") {
    curve = classical_bound(Family::parse(c.h).sample(grid), Family::parse(c.k).sample(grid), c.nondecreasing);
  } else if (c.kind == "fractional") {
    const auto a = Family::parse(c.a).sample(grid);
    const auto g = Family::parse(c.g).sample(grid);
    p.m_cap = cap(SampledFn::constant(grid, 0.0), g);
    curve = fractional_bound(a, g, alpha, c.nondecreasing, p);
  } else if (c.kind == "mixed-series" || c.kind == "mixed-closed") {
    const auto a = Family::parse(c.a).sample(grid);
    const auto b = Family::parse(c.b).sample(grid);
    const auto g = Family::parse(c.g).sample(grid);
    p.m_cap = cap(b, g);
    curve = c.kind == "mixed-series" ? mixed_bound_series(a, b, g, p) : mixed_bound_closed(a, b, g, alpha);
  } else {
    throw UsageError("unknown --kind '" + c.kind + "' (classical, fractional, mixed-series, mixed-closed)");
  }
  Run run(c);
  run.emit("bound", curve_table(curve));
  std::cout << "kind=" << c.kind << " max_value=" << num(curve.max_value()) << " final=" << num(curve.values.back())
            << " truncation=" << curve.max_truncation() << '\n';
  return 0;
}

int cmd_simulate(const RunConfig& c) {
  const TimeGrid grid = time_grid(c);
  const auto spec = coeffs(c);
  if (c.paths == 0) throw UsageError("--paths must be positive");
  PathEnsemble e;
  try {
    e = simulate_ensemble(spec, c.x0, AlphaOrder(c.alpha), grid, c.paths, c.seed, c.threads);
  } catch (const NodeError& err) {
    throw std::runtime_error(std::string(err.what()) + " [drift=" + c.drift + " sigma1=" + c.sigma1 +
                             " sigma2=" + c.sigma2 + " alpha=" + num(c.alpha) + " seed=" + std::to_string(c.seed) + "]");
  }
  const auto stats = mc_ensemble_stats(e, {1, 2});
  Table t({"t", "mean", "mean_se", "second_moment", "second_moment_se", "variance", "variance_se",
           "sup_second_moment"});
  for (std::size_t j = 0; j < grid.size(); ++j) {
    t.add({grid.node(j), stats.moments[0].mean[j], stats.moments[0].se[j], stats.moments[1].mean[j],
           stats.moments[1].se[j], stats.variance[j], stats.variance_se[j], stats.sup_second_moment[j]});
  }
  Run run(c);
  run.emit("moments", t);
  if (c.write_paths) {
    std::vector<std::string> cols{"t"};
    for (std::size_t k = 0; k < e.paths.size(); ++k) cols.push_back("path" + std::to_string(k));
    Table pt(cols);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      std::vector<double> row{grid.node(j)};
      for (const auto& p : e.paths) row.push_back(p[j]);
      pt.add(std::move(row));
    }
    run.emit("paths", pt);
  }
  std::cout << "paths=" << c.paths << " mean_T=" << num(stats.moments[0].mean.back())
            << " second_moment_T=" << num(stats.moments[1].mean.back()) << " +- "
            << num(stats.moments[1].se.back()) << " integrated_second_moment=" << num(stats.integrated_second_moment)
            << " +- " << num(stats.integrated_second_moment_se) << '\n';
  return 0;
}

int cmd_picard(const RunConfig& c) {
  const TimeGrid grid = time_grid(c);
  const AlphaOrder alpha(c.alpha);
  const AbelWeights w(alpha, grid);
  const auto spec = coeffs(c);
  const auto noise = brownian_path(c.seed, grid);
  Run run(c);
  auto gaps_table = [](const std::vector<double>& gaps) {
    Table t({"k", "gap"});
    for (std::size_t k = 0; k < gaps.size(); ++k) t.add({static_cast<double>(k + 1), gaps[k]});
    return t;
  };
  try {
    const auto r = picard_solve_path(spec, c.x0, noise, alpha, w, c.tol, c.k_max);
    Table path({"t", "x"});
    for (std::size_t j = 0; j < grid.size(); ++j) path.add({grid.node(j), r.path[j]});
    run.emit("picard_path", path);
    run.emit("gaps", gaps_table(r.gaps));
    std::cout << "converged iterations=" << r.iterations << " final_gap=" << num(r.gaps.back());
    if (!c.offsets.empty()) {
      std::vector<double> offs{0.0};
      offs.insert(offs.end(), c.offsets.begin(), c.offsets.end());
      const double d = uniqueness_probe(spec, c.x0, noise, alpha, w, offset_starts(grid, c.x0, offs), c.tol, c.k_max);
      std::cout << " uniqueness_distance=" << num(d);
    }
    std::cout << '\n';
    return 0;
  } catch (const PicardNonConvergence& e) {
    run.emit("gaps", gaps_table(e.gaps()));
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_fpk(const RunConfig& c) {
  const TimeGrid tg = time_grid(c);
  const SpaceGrid xg(c.x_min, c.x_max, c.cells);
  const auto spec = coeffs(c);
  const auto field = fpk_solve(spec, c.x0, AlphaOrder(c.alpha), tg, xg);
  if (c.slices < 2) throw UsageError("--slices must be at least 2");
  Table dens({"t", "x", "P"});
  std::size_t last = static_cast<std::size_t>(-1);
  for (std::size_t s = 0; s < c.slices; ++s) {
    const std::size_t n = (s * tg.n_steps() + (c.slices - 1) / 2) / (c.slices - 1);
    if (n == last) continue;
    last = n;
    const auto row = field.slice(n);
    for (std::size_t i = 0; i < row.size(); ++i) dens.add({tg.node(n), xg.center(i), row[i]});
  }
  Table mom({"t", "mass", "mean", "variance"});
  for (std::size_t n = 0; n < tg.size(); ++n) mom.add({tg.node(n), field.mass[n], field.mean(n), field.variance(n)});
  Run run(c);
  run.emit("density", dens);
  run.emit("fpk_moments", mom);
  std::cout << "mean_T=" << num(field.mean(tg.n_steps())) << " variance_T=" << num(field.variance(tg.n_steps()))
            << " max_mass_drift=" << num(field.max_mass_drift) << " min_density=" << num(field.min_value) << '\n';
  return 0;
}

json verdict_json(const Verdict& v) {
  json checks = json::array();
  for (const auto& ch : v.checks) {
    json j{{"name", ch.name}, {"pass", ch.pass}, {"worst_margin", ch.worst_margin}, {"t", ch.t}};
    if (!ch.detail.empty()) j["detail"] = ch.detail;
    checks.push_back(std::move(j));
  }
  return json{{"case_id", v.case_id}, {"pass", v.passed()}, {"checks", std::move(checks)}};
}

int cmd_verify(const RunConfig& c) {
  std::vector<Verdict> verdicts;
  VerifyOptions opt;
  opt.series_tol = c.series_tol;
  opt.n_max = c.n_max;
  opt.bound_scale = c.sabotage_scale;
  opt.threads = c.threads;
  if (c.battery == "default" || c.battery == "quick") {
    verdicts = run_inequality_battery(c.battery == "default" ? default_battery(1024, c.T) : quick_battery(1024, c.T), opt);
    auto red = run_reduction_suite(256, c.T);
    verdicts.insert(verdicts.end(), red.begin(), red.end());
  } else if (c.battery != "empty") {
    throw UsageError("unknown --battery '" + c.battery + "' (default, quick, empty)");
  }
  std::vector<std::string> lines;
  std::size_t failed = 0;
  for (const auto& v : verdicts) {
    lines.push_back(verdict_json(v).dump());
    if (!v.passed()) ++failed;
  }
  Run run(c);
  run.emit_lines("verdicts.jsonl", lines);
  for (const auto& l : lines) std::cout << l << '\n';
  std::cerr << "verdicts=" << verdicts.size() << " failed=" << failed << '\n';
  return failed == 0 ? 0 : 1;
}

std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string s = argv[i];
    if (s == "--config" && i + 1 < argc) return argv[i + 1];
    if (s.rfind("--config=", 0) == 0) return s.substr(9);
  }
  return {};
}

void add_common(CLI::App* sub, RunConfig& c, std::string& config_path) {
  sub->add_option("--config", config_path, "JSON config or run manifest; explicit flags override it");
  sub->add_option("--seed", c.seed, "Base random seed")->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--format", c.format, "Data file format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  sub->add_option("--alpha", c.alpha, "Fractional order in (0, 1]")->capture_default_str();
  sub->add_option("--T", c.T, "Time horizon")->capture_default_str();
  sub->add_option("--steps", c.steps, "Number of time steps")->capture_default_str();
}

void add_coeffs(CLI::App* sub, RunConfig& c) {
  sub->add_option("--drift", c.drift, "Drift b(x) family, e.g. affine:0.1,-0.5")->capture_default_str();
  sub->add_option("--sigma1", c.sigma1, "Fractional channel sigma1(x) family")->capture_default_str();
  sub->add_option("--sigma2", c.sigma2, "Diffusion sigma2(x) family")->capture_default_str();
  sub->add_option("--x0", c.x0, "Initial state")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  std::string config_path;
  try {
    config_path = find_config_arg(argc, argv);
    if (!config_path.empty()) cfg = fracgb::cli::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"fracgb: Gronwall-type bounds, fractional SDE paths and Fokker-Planck densities"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");  // -h is taken by bound --h
  app.set_version_flag("--version", "fracgb scheme " + std::to_string(kSchemeVersion));
  const std::string family_help = " (zero | const:c | linear:c | affine:c0,c1 | sin:c)";

  auto* bound = app.add_subcommand("bound", "Evaluate a Gronwall-type bound curve");
  add_common(bound, cfg, config_path);
  bound->add_option("--kind", cfg.kind, "classical | fractional | mixed-series | mixed-closed")
      ->check(CLI::IsMember({"classical", "fractional", "mixed-series", "mixed-closed"}))
      ->capture_default_str();
  bound->add_option("--a", cfg.a, "a(t)" + family_help)->capture_default_str();
  bound->add_option("--b", cfg.b, "b(t), regular kernel coefficient" + family_help)->capture_default_str();
  bound->add_option("--g", cfg.g, "g(t), singular kernel coefficient" + family_help)->capture_default_str();
  bound->add_option("--h", cfg.h, "h(t) for --kind classical" + family_help)->capture_default_str();
  bound->add_option("--k", cfg.k, "k(t) for --kind classical" + family_help)->capture_default_str();
  bound->add_flag("--nondecreasing,!--general", cfg.nondecreasing,
                  "Use the closed form for nondecreasing h or a (classical, fractional)");
  bound->add_option("--series-tol", cfg.series_tol, "Relative series truncation tolerance")->capture_default_str();
  bound->add_option("--n-max", cfg.n_max, "Largest outer series index")->capture_default_str();
  bound->add_option("--m-cap", cfg.m_cap, "Uniform bound M on b and g (0: from the data)")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Simulate a seeded path ensemble and its moments");
  add_common(simulate, cfg, config_path);
  add_coeffs(simulate, cfg);
  simulate->add_option("--paths", cfg.paths, "Number of paths")->capture_default_str();
  simulate->add_flag("--write-paths", cfg.write_paths, "Also write every path");
  simulate->add_option("--threads", cfg.threads, "Worker threads (results do not depend on it)")->capture_default_str();

  auto* picard = app.add_subcommand("picard", "Picard iteration on one frozen noise path");
  add_common(picard, cfg, config_path);
  add_coeffs(picard, cfg);
  picard->add_option("--tol", cfg.tol, "Stop when the sup-node gap drops below this")->capture_default_str();
  picard->add_option("--k-max", cfg.k_max, "Iteration limit")->capture_default_str();
  picard->add_option("--offsets", cfg.offsets, "Extra constant initial-iterate offsets for the uniqueness probe")
      ->delimiter(',');

  auto* fpk = app.add_subcommand("fpk", "Solve the fractional Fokker-Planck equation");
  add_common(fpk, cfg, config_path);
  add_coeffs(fpk, cfg);
  fpk->add_option("--x-min", cfg.x_min, "Left wall")->capture_default_str();
  fpk->add_option("--x-max", cfg.x_max, "Right wall")->capture_default_str();
  fpk->add_option("--cells", cfg.cells, "Number of cells")->capture_default_str();
  fpk->add_option("--slices", cfg.slices, "Time slices written to the density file")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "Run the bound battery and reduction checks");
  add_common(verify, cfg, config_path);
  verify->add_option("--battery", cfg.battery, "default (108 cases) | quick (alpha = 0.5 slice, 27 cases) | empty")
      ->check(CLI::IsMember({"default", "quick", "empty"}))
      ->capture_default_str();
  verify->add_option("--threads", cfg.threads, "Worker threads (results do not depend on it)")->capture_default_str();
  verify->add_option("--series-tol", cfg.series_tol, "Relative series truncation tolerance")->capture_default_str();
  verify->add_option("--n-max", cfg.n_max, "Largest outer series index")->capture_default_str();
  verify->add_option("--sabotage-scale", cfg.sabotage_scale,
                     "Test hook: multiply every bound by this factor before checking")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
  try {
    validate(cfg);
    if (cfg.command == "bound") return cmd_bound(cfg);
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "picard") return cmd_picard(cfg);
    if (cfg.command == "fpk") return cmd_fpk(cfg);
    return cmd_verify(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
