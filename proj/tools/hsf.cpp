#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hsf/cli/config.hpp"
#include "hsf/cli/runner.hpp"

namespace {

using hsf::cli::json;

enum ExitCode { kOk = 0, kConfigError = 1, kNumericError = 2 };

struct Flags {
  std::string config_file;
  std::string preset;
  std::string experiment;
  std::optional<int> L, N, site, cut, substeps, max_substeps;
  std::optional<double> J, U, g, u, omega, g_over_omega, prop_tol, conv_tol, threshold;
  std::optional<std::string> scheme, hamiltonian, output, cache_dir, initial, component, target;
  std::vector<std::string> states, locate;
  std::vector<double> g_values, ratios, J_values;
  std::vector<int> L_values;
  std::vector<std::size_t> window;
  std::optional<std::size_t> cycles, stride, count, page_samples;
  std::optional<std::uint64_t> seed, page_seed;
  std::optional<unsigned> threads;
  bool dry_run = false;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--preset", preset, "parameter preset: fig2, fig3, fig4, fig5 or fig6");
    app.add_option("--experiment", experiment, "experiment kind (when the verb accepts several)");
    app.add_option("--out", output, "output directory");
    app.add_option("--L", L, "number of sites");
    app.add_option("--N", N, "number of particles (default L/2)");
    app.add_option("--J", J, "tunnelling amplitude");
    app.add_option("--U", U, "interaction (default: equal to g)");
    app.add_option("--g", g, "tilt");
    app.add_option("--u", u, "drive amplitude");
    app.add_option("--omega", omega, "drive frequency");
    app.add_option("--g-over-omega", g_over_omega, "drive frequency given as g/omega");
    app.add_option("--g-values", g_values, "grid of tilts")->delimiter(',');
    app.add_option("--ratios", ratios, "grid of g/omega values")->delimiter(',');
    app.add_option("--L-values", L_values, "system sizes for scaling")->delimiter(',');
    app.add_option("--J-values", J_values, "tunnelling values for tdpt-check")->delimiter(',');
    app.add_option("--hamiltonian", hamiltonian, "reference Hamiltonian tag or 'auto'");
    app.add_option("--threshold", threshold, "decomposition threshold (negative: default)");
    app.add_option("--scheme", scheme, "propagation scheme: cf4 or midpoint-exponential");
    app.add_option("--substeps", substeps, "initial substeps per period");
    app.add_option("--max-substeps", max_substeps, "substep cap of the convergence check");
    app.add_option("--prop-tol", prop_tol, "per-substep exponential tolerance");
    app.add_option("--conv-tol", conv_tol, "substep-doubling convergence target");
    app.add_option("--initial", initial, "infinite-temperature, bitstring or component-sample");
    app.add_option("--state", states, "initial Fock state bitstring (repeatable)");
    app.add_option("--component", component, "component selector for component-sample");
    app.add_option("--count", count, "number of sampled initial states (0: all)");
    app.add_option("--seed", seed, "seed of the initial-state draw");
    app.add_option("--cycles", cycles, "number of drive cycles");
    app.add_option("--stride", stride, "observation stride outside the window");
    app.add_option("--window", window, "averaging window lo hi (cycles)")->expected(2);
    app.add_option("--site", site, "autocorrelation site (default L-1)");
    app.add_option("--cut", cut, "bipartition cut (default L/2)");
    app.add_option("--page-samples", page_samples, "random states for component Page values (0: D_K)");
    app.add_option("--page-seed", page_seed, "seed of the Page-value estimator");
    app.add_option("--locate", locate, "bitstrings to locate in a decomposition (repeatable)");
    app.add_option("--target", target, "bitstring whose transfer amplitude is recorded");
    app.add_option("--threads", threads, "worker threads");
    app.add_option("--cache-dir", cache_dir, "decomposition cache directory");
    app.add_flag("--dry-run", dry_run, "resolve the configuration and write only the manifest");
  }

  [[nodiscard]] json overlay() const {
    json j = json::object();
    auto put = [](json& at, const char* key, const auto& opt) {
      if (opt) at[key] = *opt;
    };
    json model = json::object();
    put(model, "L", L);
    put(model, "N", N);
    put(model, "J", J);
    put(model, "U", U);
    put(model, "g", g);
    put(model, "u", u);
    put(model, "omega", omega);
    put(model, "g_over_omega", g_over_omega);
    if (!model.empty()) j["model"] = model;
    json grid = json::object();
    if (!g_values.empty()) grid["g"] = g_values;
    if (!ratios.empty()) grid["g_over_omega"] = ratios;
    if (!L_values.empty()) grid["L"] = L_values;
    if (!J_values.empty()) grid["J"] = J_values;
    if (!grid.empty()) j["grid"] = grid;
    json prop = json::object();
    put(prop, "scheme", scheme);
    put(prop, "substeps", substeps);
    put(prop, "max_substeps", max_substeps);
    put(prop, "tol", prop_tol);
    put(prop, "convergence_tol", conv_tol);
    if (!prop.empty()) j["propagator"] = prop;
    json init = json::object();
    put(init, "kind", initial);
    if (!states.empty()) {
      init["bitstrings"] = states;
      if (!initial) init["kind"] = "bitstring";
    }
    put(init, "component", component);
    put(init, "count", count);
    put(init, "seed", seed);
    if (!init.empty()) j["initial"] = init;
    json sched = json::object();
    put(sched, "cycles", cycles);
    put(sched, "stride", stride);
    if (!window.empty()) sched["window"] = window;
    if (!sched.empty()) j["schedule"] = sched;
    json page = json::object();
    put(page, "samples", page_samples);
    put(page, "seed", page_seed);
    if (!page.empty()) j["page"] = page;
    put(j, "hamiltonian", hamiltonian);
    put(j, "threshold", threshold);
    put(j, "site", site);
    put(j, "cut", cut);
    put(j, "target", target);
    put(j, "threads", threads);
    put(j, "output", output);
    put(j, "cache_dir", cache_dir);
    if (!locate.empty()) j["locate"] = locate;
    return j;
  }
};

hsf::cli::ExperimentConfig resolve(const std::string& verb, const Flags& f) {
  using namespace hsf::cli;
  ExperimentConfig c;
  const json file = f.config_file.empty() ? json::object() : load_json_file(f.config_file);
  if (!file.is_object()) throw ConfigError("configuration must be a JSON object");
  std::string preset_name = f.preset;
  if (preset_name.empty() && file.contains("preset")) preset_name = file.at("preset").get<std::string>();
  if (!preset_name.empty()) {
    apply_json(c, preset(preset_name, verb));
    c.preset = preset_name;
  }
  apply_json(c, file);
  apply_json(c, f.overlay());
  const auto& kinds = verb_kinds().at(verb);
  if (!f.experiment.empty()) c.experiment = f.experiment;
  if (c.experiment.empty()) c.experiment = kinds.front();
  if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end())
    throw ConfigError("verb '" + verb + "' does not run experiment '" + c.experiment + "'");
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fragmentation diagnostics for driven tilted fermion chains"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::pair<std::string, CLI::App*>> verbs;
  for (const auto& [verb, kinds] : hsf::cli::verb_kinds()) {
    auto* sub = app.add_subcommand(verb, "run the " + kinds.front() + " experiment");
    flags.attach(*sub);
    verbs.emplace_back(verb, sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  std::string verb;
  for (const auto& [name, sub] : verbs)
    if (sub->parsed()) verb = name;
  try {
    auto cfg = resolve(verb, flags);
    hsf::cli::Runner runner(std::move(cfg), verb);
    if (flags.dry_run)
      runner.dry_run();
    else
      runner.run();
  } catch (const hsf::NumericError& e) {
    std::cerr << "hsf: numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const hsf::ParameterError& e) {
    std::cerr << "hsf: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const hsf::ContractError& e) {
    std::cerr << "hsf: contract violation: " << e.what() << '\n';
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "hsf: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "hsf: error: " << e.what() << '\n';
    return kNumericError;
  }
  return kOk;
}
