#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "qpar/el_verify.hpp"
#include "qpar/pareto.hpp"
#include "qpar/perturb2.hpp"
#include "qpar/scene_io.hpp"
#include "qpar/sensitivity.hpp"
#include "qpar/testbeds.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace qpar;
using cli::RunConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotFound = 2;

void setup_logging(const fs::path& out_dir) {
  const char* env = std::getenv("QPAR_LOG");
  const auto level = env ? spdlog::level::from_str(env) : spdlog::level::warn;
  auto console = std::make_shared<spdlog::sinks::stderr_sink_st>();
  console->set_level(level);
  std::vector<spdlog::sink_ptr> sinks{console};
  try {
    auto file = std::make_shared<spdlog::sinks::basic_file_sink_st>((out_dir / "run.log").string(),
                                                                     true);
    file->set_level(env ? level : spdlog::level::info);
    sinks.push_back(file);
  } catch (const spdlog::spdlog_ex&) {
  }
  auto logger = std::make_shared<spdlog::logger>("qpar", sinks.begin(), sinks.end());
  logger->set_level(spdlog::level::trace);
  spdlog::set_default_logger(logger);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

MaterialScene load_scene(const RunConfig& c) {
  if (!c.scene.empty() && !c.testbed.empty()) throw Error("give either --scene or --testbed");
  if (!c.testbed.empty()) return build_scene(c.testbed);
  if (c.scene.empty()) throw Error("a scene is required (--scene or --testbed)");
  auto scene = read_scene(c.scene);
  const auto report = validate_scene(scene);
  if (!report.ok()) throw ValidationError(report);
  return scene;
}

std::string scene_label(const RunConfig& c) { return c.testbed.empty() ? c.scene : c.testbed; }

EigenOptions eigen_options(const RunConfig& c) {
  EigenOptions eo;
  eo.seed = c.seed;
  if (c.tol_eigen) eo.tol = *c.tol_eigen;
  return eo;
}

OptimizeOptions optimize_options(const RunConfig& c) {
  OptimizeOptions o;
  o.seed = c.seed;
  o.max_iterations = c.max_iterations;
  if (c.tol_eigen) o.eigen_tol = *c.tol_eigen;
  if (c.tol_alpha) o.alpha_tol_rel = *c.tol_alpha;
  if (c.dead_band) o.dead_band_rel = *c.dead_band;
  if (c.window_center) o.window_center = *c.window_center;
  if (c.window_radius) o.window_radius = *c.window_radius;
  if (!c.variant.empty()) o.variant = switching_variant_from_string(c.variant);
  return o;
}

int cmd_solve(const RunConfig& c) {
  const auto scene = load_scene(c);
  const auto op = DiscreteOperator::assemble(scene);
  if (!c.window_center) throw Error("solve needs --window-center");
  const SearchWindow win{*c.window_center, c.window_radius.value_or(1.0), c.count};
  const auto pairs = find_eigs(op, win, eigen_options(c));
  json list = json::array();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto name = "eigenpair_" + std::to_string(k) + ".qpef";
    write_eigenpair(fs::path(c.out_dir) / name, pairs[k], scene);
    list.push_back({{"omega", complex_json(pairs[k].omega)},
                    {"gamma", pairs[k].gamma()},
                    {"Q", pairs[k].q_factor()},
                    {"residual", pairs[k].residual},
                    {"file", name}});
  }
  write_json(fs::path(c.out_dir) / "summary.json",
             {{"command", "solve"},
              {"scene", scene_label(c)},
              {"window", {{"center", complex_json(win.center)}, {"radius", win.radius}}},
              {"eigenpairs", list}});
  return pairs.empty() ? kExitNotFound : kExitOk;
}

json point_json(const FrontierEntry& e, const std::string& scene_file) {
  json j;
  j["alpha"] = e.alpha;
  if (!e.point) {
    j["gamma"] = nullptr;
    j["Q"] = nullptr;
    j["converged"] = false;
    j["iterations"] = 0;
    j["el_residual"] = nullptr;
    j["bang_bang_fraction"] = nullptr;
    j["singular_fraction"] = nullptr;
    j["scene_file"] = nullptr;
    j["status"] = e.status;
    return j;
  }
  const auto& p = *e.point;
  j["gamma"] = p.gamma;
  j["Q"] = p.pair.q_factor();
  j["converged"] = p.converged;
  j["iterations"] = p.iterations;
  j["el_residual"] = p.el_report.residual;
  j["bang_bang_fraction"] = p.el_report.bang_bang_fraction;
  j["singular_fraction"] = p.el_report.singular_fraction;
  j["scene_file"] = scene_file;
  j["status"] = e.status;
  j["stop_reason"] = p.status;
  j["omega"] = complex_json(p.pair.omega);
  j["variant"] = to_string(p.el_report.variant);
  j["phase_theta"] = p.el_report.phase_theta;
  j["certification"] = "first-order local optimality only";
  return j;
}

int cmd_frontier(const RunConfig& c, std::vector<double> alphas) {
  const auto scene = load_scene(c);
  const auto entries = sweep_frontier(scene, alphas, optimize_options(c));
  json list = json::array();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    std::string file;
    if (entries[k].point) {
      file = "frontier_" + std::to_string(k) + ".qpsc";
      write_scene(fs::path(c.out_dir) / file, entries[k].point->scene);
      write_eigenpair(fs::path(c.out_dir) / ("frontier_" + std::to_string(k) + ".qpef"),
                      entries[k].point->pair, entries[k].point->scene);
    }
    list.push_back(point_json(entries[k], file));
  }
  write_json(fs::path(c.out_dir) / "frontier.json", list);
  return kExitOk;
}

int cmd_verify_el(const RunConfig& c, bool raw_phase) {
  const auto scene = load_scene(c);
  const auto op = DiscreteOperator::assemble(scene);
  if (c.eigenpair.empty()) throw Error("verify-el needs --eigenpair");
  const auto pair = read_eigenpair(c.eigenpair, op);
  const auto variant = c.variant.empty() ? default_variant(scene.family().kind)
                                         : switching_variant_from_string(c.variant);
  const double band = c.dead_band.value_or(1e-10);
  bool optimal = true;
  std::string why;
  VerifyResult v;
  try {
    v = verify_el(pair, op, variant, band, 1e-8, !raw_phase);
  } catch (const NotFirstOrderOptimal& e) {
    // The cone is wider than a half-plane; report the residual for the stored phase.
    optimal = false;
    why = e.what();
    v = verify_el(pair, op, variant, band, 1e-8, false);
  }
  const auto& r = v.report;
  write_json(fs::path(c.out_dir) / "el_report.json",
             {{"scene", scene_label(c)},
              {"eigenpair", c.eigenpair},
              {"variant", to_string(r.variant)},
              {"residual", r.residual},
              {"vacuous", r.vacuous},
              {"undefined", r.undefined},
              {"singular_fraction", r.singular_fraction},
              {"bang_bang_fraction", r.bang_bang_fraction},
              {"phase_theta", r.phase_theta},
              {"phase_fixed", !raw_phase && optimal},
              {"first_order_optimal", raw_phase ? json(nullptr) : json(optimal)},
              {"note", why}});
  return kExitOk;
}

int cmd_lemma(const RunConfig& c) {
  if (c.probe.empty()) throw Error("lemma needs --probe");
  const auto probe = make_probe(c.probe);
  const auto eta = eta_coefficients(probe);
  const auto cov = sector_coverage(probe, c.delta1, c.delta2);
  json j{{"label", probe.label},
         {"eta1", complex_json(eta.eta1)},
         {"eta2", complex_json(eta.eta2)},
         {"covered", cov.covered},
         {"delta3", cov.covered ? json(cov.delta3) : json(nullptr)}};
  j["delta1"] = c.delta1;
  j["delta2"] = c.delta2;
  j["swapped"] = eta.swapped;
  j["samples"] = cov.samples;
  j["half_plane"] = cov.half_plane;
  if (cov.counterexample) j["counterexample"] = complex_json(*cov.counterexample);
  write_json(fs::path(c.out_dir) / "lemma.json", j);
  return kExitOk;
}

int cmd_testbed(const RunConfig& c, bool list) {
  if (list) {
    json out = json::array();
    for (const auto& t : testbed_catalog()) {
      json oracles = json::array();
      for (const auto& o : t.oracles)
        oracles.push_back({{"name", o.name},
                           {"value", complex_json(o.value)},
                           {"provenance", o.provenance},
                           {"recipe", o.recipe}});
      out.push_back({{"name", t.name}, {"description", t.description}, {"oracles", oracles}});
    }
    std::cout << out.dump(2) << '\n';
    return kExitOk;
  }
  if (c.testbed.empty()) throw Error("testbed needs --testbed or --list");
  const auto scene = build_scene(c.testbed);
  const auto path = fs::path(c.out_dir) / (c.testbed + ".qpsc");
  write_scene(path, scene);
  std::cout << path.string() << '\n';
  return kExitOk;
}

int cmd_export_op(const RunConfig& c) {
  const auto op = DiscreteOperator::assemble(load_scene(c));
  const auto path = fs::path(c.out_dir) / "operator.coo";
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  op.export_coo(out);
  std::cout << path.string() << '\n';
  return kExitOk;
}

int cmd_fd(const RunConfig& c) {
  const auto scene = load_scene(c);
  const auto op = DiscreteOperator::assemble(scene);
  if (!c.window_center) throw Error("fd needs --window-center");
  const auto pairs =
      find_eigs(op, {*c.window_center, c.window_radius.value_or(1.0), 1}, eigen_options(c));
  if (pairs.empty()) return kExitNotFound;
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& fam = scene.family();
  // One random permittivity per fiber keeps the target inside the family.
  std::vector<double> cell_eps(scene.grid().cell_count(), 0.0);
  for (const auto& fiber : scene.fibers()) {
    const double e = fam.eps_minus + unit(rng) * (fam.eps_plus - fam.eps_minus);
    for (std::size_t cell : fiber) cell_eps[cell] = e;
  }
  std::vector<double> target;
  for (std::size_t cell : scene.opt_cells()) target.push_back(cell_eps[cell]);
  auto p = symmetry_project(admissible_direction(scene, target), scene);
  const auto steps = c.steps.empty() ? std::vector<double>{1e-2, 1e-3, 1e-4} : c.steps;
  FdOptions fo;
  fo.eigen = eigen_options(c);
  const auto table = fd_validate(scene, pairs.front(), p, steps, fo);
  const auto path = fs::path(c.out_dir) / "fd_table.tsv";
  std::ofstream out(path);
  table.write(out);
  table.write(std::cout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pareto optimization of resonator loss rates"};
  app.require_subcommand(1);
  RunConfig c;
  std::string window_center, alphas, steps, config_in;
  bool list = false, raw_phase = false;

  auto common = [&](CLI::App* s) {
    s->add_option("--scene", c.scene, "scene file");
    s->add_option("--testbed", c.testbed, "named testbed");
    s->add_option("--seed", c.seed, "random seed")->capture_default_str();
    s->add_option("--threads", c.threads, "worker cap")->capture_default_str()->check(
        CLI::PositiveNumber);
    s->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
    s->add_option("--tol-eigen", c.tol_eigen, "eigensolver residual tolerance");
    s->add_option("--tol-alpha", c.tol_alpha, "relative tolerance on Re omega = alpha");
    s->add_option("--dead-band", c.dead_band, "relative dead band of the switching function");
    s->add_option("--window-center", window_center, "search window center re,im");
    s->add_option("--window-radius", c.window_radius, "search window radius");
    s->add_option("--variant", c.variant, "switching variant")
        ->check(CLI::IsMember({"full3d", "crystal2d", "crystal1d", "sigma"}));
    s->add_option("--config", config_in, "JSON run config to start from");
  };

  auto* solve = app.add_subcommand("solve", "eigenpairs in a window");
  common(solve);
  solve->add_option("--count", c.count, "number of eigenpairs")->capture_default_str();
  auto* optimize = app.add_subcommand("optimize", "minimize Gamma at one alpha");
  common(optimize);
  optimize->add_option("--alpha", c.alpha, "target Re omega");
  optimize->add_option("--max-iterations", c.max_iterations, "descent iteration cap")
      ->capture_default_str();
  auto* sweep = app.add_subcommand("sweep", "Pareto frontier over alphas");
  common(sweep);
  sweep->add_option("--alphas", alphas, "comma-separated increasing alphas");
  sweep->add_option("--max-iterations", c.max_iterations, "descent iteration cap")
      ->capture_default_str();
  auto* verify = app.add_subcommand("verify-el", "Euler-Lagrange diagnostics of an eigenpair");
  common(verify);
  verify->add_option("--eigenpair", c.eigenpair, "eigenpair file");
  verify->add_flag("--raw-phase", raw_phase, "skip the phase fix and use the stored phase");
  auto* lemma = app.add_subcommand("lemma", "two-parameter perturbation harness");
  common(lemma);
  lemma->add_option("--probe", c.probe, "probe label: linear, swapped, sin or quadratic");
  lemma->add_option("--delta1", c.delta1, "parameter triangle size")->capture_default_str();
  lemma->add_option("--delta2", c.delta2, "angular margin of the sector")->capture_default_str();
  auto* testbed = app.add_subcommand("testbed", "dump or list the named testbeds");
  common(testbed);
  testbed->add_flag("--list", list, "print the catalog");
  auto* exportop = app.add_subcommand("export-op", "write the operator as COO text");
  common(exportop);
  auto* fd = app.add_subcommand("fd", "finite-difference check of the sensitivity");
  common(fd);
  fd->add_option("--steps", steps, "comma-separated steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    if (!config_in.empty()) {
      std::ifstream in(config_in);
      if (!in) throw Error("cannot read " + config_in);
      RunConfig base = cli::config_from_json(nlohmann::json::parse(in));
      // Flags given on the command line override the file.
      for (const auto* opt : sub->get_options())
        if (opt->count() == 0 && opt->get_name() != "--help") {
          const auto n = opt->get_name();
          if (n == "--scene") c.scene = base.scene;
          else if (n == "--testbed") c.testbed = base.testbed;
          else if (n == "--seed") c.seed = base.seed;
          else if (n == "--threads") c.threads = base.threads;
          else if (n == "--out-dir") c.out_dir = base.out_dir;
          else if (n == "--tol-eigen") c.tol_eigen = base.tol_eigen;
          else if (n == "--tol-alpha") c.tol_alpha = base.tol_alpha;
          else if (n == "--dead-band") c.dead_band = base.dead_band;
          else if (n == "--window-center") c.window_center = base.window_center;
          else if (n == "--window-radius") c.window_radius = base.window_radius;
          else if (n == "--variant") c.variant = base.variant;
          else if (n == "--alpha") c.alpha = base.alpha;
          else if (n == "--alphas") c.alphas = base.alphas;
          else if (n == "--count") c.count = base.count;
          else if (n == "--eigenpair") c.eigenpair = base.eigenpair;
          else if (n == "--probe") c.probe = base.probe;
          else if (n == "--delta1") c.delta1 = base.delta1;
          else if (n == "--delta2") c.delta2 = base.delta2;
          else if (n == "--steps") c.steps = base.steps;
          else if (n == "--max-iterations") c.max_iterations = base.max_iterations;
        }
    }
    c.command = sub->get_name();
    if (!window_center.empty()) c.window_center = cli::parse_complex(window_center);
    if (!alphas.empty()) c.alphas = cli::parse_list(alphas);
    if (!steps.empty()) c.steps = cli::parse_list(steps);
    fs::create_directories(c.out_dir);
    setup_logging(c.out_dir);
    spdlog::info("qpar {} config {}", c.command, cli::to_json(c).dump());
    {
      std::ofstream cfg(fs::path(c.out_dir) / "run_config.json");
      cfg << cli::to_json(c).dump(2) << '\n';
    }

    if (c.command == "solve") return cmd_solve(c);
    if (c.command == "optimize") {
      if (!c.alpha) throw Error("optimize needs --alpha");
      return cmd_frontier(c, {*c.alpha});
    }
    if (c.command == "sweep") {
      if (c.alphas.empty()) throw Error("sweep needs --alphas");
      return cmd_frontier(c, c.alphas);
    }
    if (c.command == "verify-el") return cmd_verify_el(c, raw_phase);
    if (c.command == "lemma") return cmd_lemma(c);
    if (c.command == "testbed") return cmd_testbed(c, list);
    if (c.command == "export-op") return cmd_export_op(c);
    if (c.command == "fd") return cmd_fd(c);
    throw Error("unknown command " + c.command);
  } catch (const ValidationError& e) {
    std::cerr << "invalid scene:\n" << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
