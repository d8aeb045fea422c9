// alfven: run experiments and recompute diagnostics from their dumps.
//
//   alfven run --config collision.ini --out runs/collision
//   alfven norms runs/collision
//   alfven scatter runs/collision
//   alfven model1d --out runs/model1d

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "alfven/errors.hpp"
#include "alfven/experiments.hpp"
#include "alfven/io.hpp"

namespace fs = std::filesystem;
using namespace alfven;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  bool quiet = false;
};

void print_assertions(const RunManifest& m, bool quiet) {
  if (quiet) return;
  for (const auto& a : m.assertions) {
    std::printf("%s  %-36s %.3e %s %.3e\n", a.passed ? "PASS" : "FAIL", a.name.c_str(), a.value,
                a.at_least ? ">=" : "<=", a.threshold);
  }
  std::printf("%s: %s in %.1f s\n", m.kind.c_str(), m.all_passed() ? "all assertions passed" : "FAILED",
              m.wall_clock);
}

ExperimentConfig load(const Common& c, std::optional<ExperimentKind> force_kind) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = io::parse_config(fs::path(c.config));
  } else if (force_kind) {
    cfg.kind = *force_kind;
  } else {
    throw MissingKey("--config is required");
  }
  if (force_kind && cfg.kind != *force_kind) {
    throw RangeError(c.config + ": experiment kind is " + to_string(cfg.kind) + ", expected " + to_string(*force_kind));
  }
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (c.dt) cfg.stepper.dt = *c.dt;
  cfg.verbose = !c.quiet;
  cfg.validate();
  return cfg;
}

// Inputs given as files or run directories, expanded with `pick`.
std::vector<fs::path> expand(const std::vector<std::string>& inputs, bool (*pick)(const fs::path&)) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && pick(e.path())) found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

bool is_plus_state(const fs::path& p) {
  const std::string n = p.filename().string();
  return n.size() > 9 && n.ends_with("_plus.bin") && n.rfind("scattering_", 0) != 0;
}

bool is_scattering(const fs::path& p) {
  const std::string n = p.filename().string();
  return n.rfind("scattering_", 0) == 0 && n.ends_with(".bin");
}

int cmd_run(const Common& c) {
  const ExperimentConfig cfg = load(c, std::nullopt);
  const RunManifest m = run_experiment(cfg);
  print_assertions(m, c.quiet);
  return m.all_passed() ? 0 : 1;
}

int cmd_model1d(const Common& c) {
  const ExperimentConfig cfg = load(c, ExperimentKind::model1d);
  const RunManifest m = run_model1d(cfg);
  print_assertions(m, c.quiet);
  return m.all_passed() ? 0 : 1;
}

int cmd_norms(const Common& c, const std::vector<std::string>& inputs, int k_max) {
  NormSeries series;
  series.k_max = k_max;
  for (const fs::path& plus : expand(inputs, is_plus_state)) {
    std::string name = plus.filename().string();
    name.replace(name.size() - 9, 9, "_minus.bin");
    const fs::path minus = plus.parent_path() / name;
    const ElsasserState s = io::read_state_dumps(plus, minus);
    series.samples.push_back(snapshot_norms(s, k_max));
    if (!c.quiet) {
      const auto& x = series.samples.back();
      std::printf("%s  t = %g  E+ = %.12e  E- = %.12e  energy = %.12e  max|div| = %.2e\n", plus.string().c_str(), x.t,
                  x.E[0], x.E[1], x.energy, x.max_divergence);
    }
  }
  if (series.samples.empty()) throw IoError("norms: no state dumps found");
  std::sort(series.samples.begin(), series.samples.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  if (!c.out.empty()) io::write_norms_csv(fs::path(c.out) / "norms_recomputed.csv", series);
  return 0;
}

int cmd_scatter(const Common& c, const std::vector<std::string>& inputs, int k_max, double rel_tol) {
  bool ok = true;
  for (const fs::path& p : expand(inputs, is_scattering)) {
    const ScatteringField f = io::read_scattering(p);
    // Compare against the norms stored when the run wrote the dump.
    std::vector<double> stored;
    fs::path side = p;
    side += ".json";
    if (fs::exists(side)) {
      std::ifstream in(side);
      const auto j = nlohmann::json::parse(in);
      stored = j.at("norms").get<std::vector<double>>();
    }
    for (int k = 0; k <= k_max; ++k) {
      const double v = scattering_norm(f, k);
      std::string verdict;
      if (k < static_cast<int>(stored.size())) {
        const double rel = std::abs(v - stored[k]) / std::max(std::abs(stored[k]), 1e-300);
        const bool pass = std::isfinite(v) && rel <= rel_tol;
        ok = ok && pass;
        char buf[64];
        std::snprintf(buf, sizeof buf, "  %s (rel diff %.1e)", pass ? "PASS" : "FAIL", rel);
        verdict = buf;
      } else {
        ok = ok && std::isfinite(v);
      }
      if (!c.quiet) std::printf("%s  k = %d  norm = %.12e%s\n", p.string().c_str(), k, v, verdict.c_str());
    }
  }
  return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Alfven wave collisions in ideal MHD: runs, diagnostics and scattering fields"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", c.config, "Experiment INI file");
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--seed", c.seed, "Base seed for packet polarizations");
    sub->add_option("--dt", c.dt, "Time step")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", c.quiet, "Only report errors");
  };

  auto* run = app.add_subcommand("run", "Run the experiment described by a config");
  add_common(run, true);

  std::vector<std::string> inputs;
  int k_max = 2;
  auto* norms = app.add_subcommand("norms", "Recompute norms from state dumps");
  add_common(norms, false);
  norms->add_option("inputs", inputs, "Run directories or *_plus.bin dumps")->required();
  norms->add_option("--k-max", k_max, "Highest derivative order")->check(CLI::Range(0, 4));

  double rel_tol = 1e-9;
  auto* scatter = app.add_subcommand("scatter", "Recompute scattering norms from dumps");
  add_common(scatter, false);
  scatter->add_option("inputs", inputs, "Run directories or scattering dumps")->required();
  scatter->add_option("--k-max", k_max, "Highest derivative order")->check(CLI::Range(0, 4));
  scatter->add_option("--rel-tol", rel_tol, "Agreement required with the stored norms");

  auto* model = app.add_subcommand("model1d", "Run the 1D wave model checks");
  add_common(model, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(c);
    if (norms->parsed()) return cmd_norms(c, inputs, k_max);
    if (scatter->parsed()) return cmd_scatter(c, inputs, k_max, rel_tol);
    if (model->parsed()) return cmd_model1d(c);
  } catch (const alfven::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
