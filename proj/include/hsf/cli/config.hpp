#pragma once

// Experiment configuration for the command-line runner: JSON keys,
// presets and resolution of derived defaults.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsf/basis.hpp"
#include "hsf/error.hpp"
#include "hsf/floquet.hpp"
#include "hsf/model.hpp"

namespace hsf::cli {

using nlohmann::json;

/// Raised for malformed or inconsistent configuration.
class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

inline const std::set<std::string>& experiment_kinds() {
  static const std::set<std::string> kinds{"basis-dump",      "decompose",    "scaling", "ee-dynamics",
                                           "density-profile", "autocorrelation", "fidelity", "tdpt-check",
                                           "frequency-sweep", "phase-map"};
  return kinds;
}

/// Verb name to the experiment kinds it accepts; the first is the default.
inline const std::map<std::string, std::vector<std::string>>& verb_kinds() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"basis", {"basis-dump"}},
      {"decompose", {"decompose"}},
      {"scaling", {"scaling"}},
      {"evolve", {"ee-dynamics", "density-profile", "fidelity"}},
      {"autocorr", {"autocorrelation"}},
      {"sweep", {"frequency-sweep"}},
      {"phase-map", {"phase-map"}},
      {"tdpt-check", {"tdpt-check"}},
  };
  return m;
}

struct InitialSpec {
  /// "infinite-temperature", "bitstring" or "component-sample".
  std::string kind = "infinite-temperature";
  std::vector<std::string> bitstrings;
  /// "largest", "largest-even", "largest-odd" or "containing:<bitstring>".
  std::string component = "largest";
  std::size_t count = 50;  ///< 0 takes every member
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  std::string experiment;
  std::string preset;

  int L = 12;
  int N = -1;  ///< -1 means L / 2
  double J = 1.0;
  std::optional<double> U;  ///< unset means U = g
  double g = 50.0;
  double u = 0.0;
  std::optional<double> omega;         ///< explicit drive frequency
  std::optional<double> g_over_omega;  ///< alternative to omega

  std::vector<double> g_values;
  std::vector<double> g_over_omega_values;
  std::vector<int> L_values;
  std::vector<double> J_values;

  std::string hamiltonian = "auto";
  double threshold = -1.0;
  PropagatorConfig propagator;
  InitialSpec initial;

  std::size_t cycles = 100;
  std::size_t stride = 1;
  std::optional<std::pair<std::size_t, std::size_t>> window;
  int site = -1;
  int cut = -1;
  std::size_t page_samples = 0;
  std::uint64_t page_seed = 1;
  std::vector<std::string> locate;
  std::string target;

  unsigned threads = 1;
  std::string output = "out";
  std::string cache_dir;

  [[nodiscard]] int particles() const { return N < 0 ? L / 2 : N; }
  [[nodiscard]] int resolved_site() const { return site < 0 ? L - 1 : site; }
  [[nodiscard]] int resolved_cut() const { return cut < 0 ? L / 2 : cut; }
  [[nodiscard]] std::pair<std::size_t, std::size_t> resolved_window() const {
    if (window) return *window;
    return {cycles - cycles / 10, cycles};
  }

  /// Model parameters at tilt `tilt` and drive frequency `w`.
  [[nodiscard]] ModelParams params_at(double tilt, double w) const {
    ModelParams p;
    p.L = L;
    p.N = particles();
    p.J = J;
    p.g = tilt;
    p.U = U.value_or(tilt);
    p.u = u;
    p.omega = w;
    return p;
  }

  [[nodiscard]] double omega_at(double tilt) const {
    if (omega) return *omega;
    return tilt / g_over_omega.value_or(1.0);
  }

  [[nodiscard]] ModelParams params() const { return params_at(g, omega_at(g)); }

  [[nodiscard]] std::vector<double> tilts() const { return g_values.empty() ? std::vector<double>{g} : g_values; }

  /// Observation cycles: every `stride` up to `cycles`, plus each cycle of the window.
  [[nodiscard]] std::vector<std::size_t> schedule() const {
    std::set<std::size_t> k;
    for (std::size_t c = 0; c <= cycles; c += stride) k.insert(c);
    const auto [lo, hi] = resolved_window();
    for (std::size_t c = lo; c <= hi; ++c) k.insert(c);
    k.insert(cycles);
    return {k.begin(), k.end()};
  }

  void validate() const {
    if (!experiment_kinds().count(experiment)) throw ConfigError("unknown experiment kind: " + experiment);
    if (L < 1 || L > 28) throw ConfigError("L must lie in [1, 28]");
    if (particles() > L) throw ConfigError("N must not exceed L");
    if (!(J >= 0.0)) throw ConfigError("J must be non-negative");
    if (omega && !(*omega > 0.0)) throw ConfigError("omega must be positive");
    if (g_over_omega && !(*g_over_omega > 0.0)) throw ConfigError("g_over_omega must be positive");
    if (omega && g_over_omega) throw ConfigError("set either omega or g_over_omega, not both");
    for (double r : g_over_omega_values)
      if (!(r > 0.0)) throw ConfigError("g_over_omega grid values must be positive");
    for (int l : L_values)
      if (l < 2 || l > 28) throw ConfigError("L_values must lie in [2, 28]");
    if (stride == 0) throw ConfigError("stride must be positive");
    if (cycles > 1000000) throw ConfigError("at most 10^6 cycles are supported");
    const auto [lo, hi] = resolved_window();
    if (lo > hi || hi > cycles) throw ConfigError("window must satisfy lo <= hi <= cycles");
    if (resolved_site() < 0 || resolved_site() >= L) throw ConfigError("site out of range");
    if (resolved_cut() < 0 || resolved_cut() > L) throw ConfigError("cut out of range");
    if (threads == 0) throw ConfigError("threads must be positive");
    if (hamiltonian != "auto") (void)kind_from_tag(hamiltonian);
    static const std::set<std::string> init{"infinite-temperature", "bitstring", "component-sample"};
    if (!init.count(initial.kind)) throw ConfigError("unknown initial-state kind: " + initial.kind);
    if (initial.kind == "bitstring" && initial.bitstrings.empty())
      throw ConfigError("initial kind 'bitstring' needs at least one bitstring");
    for (const auto& s : initial.bitstrings) check_bitstring(s);
    for (const auto& s : locate) check_bitstring(s);
    if (!target.empty()) check_bitstring(target);
    try {
      propagator.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  }

  void check_bitstring(const std::string& s) const {
    const auto st = FockState::from_string(s);
    if (st.sites() != L || st.particles() != particles())
      throw ConfigError("bitstring " + s + " is not in the configured sector");
  }
};

namespace detail {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
void take(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    out.reset();
  else
    out = j.at(key).get<T>();
}

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

}  // namespace detail

/// Overlay the keys present in `j` onto `c`.
inline void apply_json(ExperimentConfig& c, const json& j) {
  using detail::take;
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  detail::reject_unknown(j,
                         {"experiment", "preset", "model", "grid", "hamiltonian", "threshold", "propagator", "initial",
                          "schedule", "site", "cut", "page", "locate", "target", "threads", "output", "cache_dir"},
                         "configuration");
  try {
    take(j, "experiment", c.experiment);
    take(j, "preset", c.preset);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      detail::reject_unknown(m, {"L", "N", "J", "U", "g", "u", "omega", "g_over_omega"}, "model");
      take(m, "L", c.L);
      take(m, "N", c.N);
      take(m, "J", c.J);
      take(m, "U", c.U);
      take(m, "g", c.g);
      take(m, "u", c.u);
      if (m.contains("omega") && m.contains("g_over_omega"))
        throw ConfigError("set either omega or g_over_omega, not both");
      if (m.contains("omega")) c.g_over_omega.reset();
      if (m.contains("g_over_omega")) c.omega.reset();
      take(m, "omega", c.omega);
      take(m, "g_over_omega", c.g_over_omega);
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      detail::reject_unknown(g, {"g", "g_over_omega", "L", "J"}, "grid");
      take(g, "g", c.g_values);
      take(g, "g_over_omega", c.g_over_omega_values);
      take(g, "L", c.L_values);
      take(g, "J", c.J_values);
    }
    take(j, "hamiltonian", c.hamiltonian);
    take(j, "threshold", c.threshold);
    if (j.contains("propagator")) {
      const auto& p = j.at("propagator");
      detail::reject_unknown(p, {"scheme", "substeps", "tol", "convergence_tol", "max_substeps"}, "propagator");
      if (p.contains("scheme")) c.propagator.scheme = scheme_from_string(p.at("scheme").get<std::string>());
      take(p, "substeps", c.propagator.substeps_per_period);
      take(p, "tol", c.propagator.tol);
      take(p, "convergence_tol", c.propagator.convergence_tol);
      take(p, "max_substeps", c.propagator.max_substeps);
    }
    if (j.contains("initial")) {
      const auto& i = j.at("initial");
      detail::reject_unknown(i, {"kind", "bitstrings", "component", "count", "seed"}, "initial");
      take(i, "kind", c.initial.kind);
      take(i, "bitstrings", c.initial.bitstrings);
      take(i, "component", c.initial.component);
      take(i, "count", c.initial.count);
      take(i, "seed", c.initial.seed);
    }
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      detail::reject_unknown(s, {"cycles", "stride", "window"}, "schedule");
      take(s, "cycles", c.cycles);
      take(s, "stride", c.stride);
      if (s.contains("window")) {
        const auto w = s.at("window").get<std::vector<std::size_t>>();
        if (w.size() != 2) throw ConfigError("window must be [lo, hi]");
        c.window = std::make_pair(w[0], w[1]);
      }
    }
    take(j, "site", c.site);
    take(j, "cut", c.cut);
    if (j.contains("page")) {
      const auto& p = j.at("page");
      detail::reject_unknown(p, {"samples", "seed"}, "page");
      take(p, "samples", c.page_samples);
      take(p, "seed", c.page_seed);
    }
    take(j, "locate", c.locate);
    take(j, "target", c.target);
    take(j, "threads", c.threads);
    take(j, "output", c.output);
    take(j, "cache_dir", c.cache_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid configuration value: ") + e.what());
  }
}

/// Fully resolved configuration, defaults included.
inline json to_json(const ExperimentConfig& c) {
  const auto p = c.params();
  const auto [lo, hi] = c.resolved_window();
  return json{
      {"experiment", c.experiment},
      {"preset", c.preset},
      {"model",
       {{"L", c.L},
        {"N", c.particles()},
        {"J", c.J},
        {"U", p.U},
        {"U_follows_g", !c.U.has_value()},
        {"g", c.g},
        {"u", c.u},
        {"omega", p.omega},
        {"g_over_omega", c.g / p.omega}}},
      {"grid", {{"g", c.tilts()}, {"g_over_omega", c.g_over_omega_values}, {"L", c.L_values}, {"J", c.J_values}}},
      {"hamiltonian", c.hamiltonian},
      {"threshold", c.threshold},
      {"propagator",
       {{"scheme", std::string(to_string(c.propagator.scheme))},
        {"substeps", c.propagator.substeps_per_period},
        {"tol", c.propagator.tol},
        {"convergence_tol", c.propagator.convergence_tol},
        {"max_substeps", c.propagator.max_substeps}}},
      {"initial",
       {{"kind", c.initial.kind},
        {"bitstrings", c.initial.bitstrings},
        {"component", c.initial.component},
        {"count", c.initial.count},
        {"seed", c.initial.seed}}},
      {"schedule", {{"cycles", c.cycles}, {"stride", c.stride}, {"window", {lo, hi}}}},
      {"site", c.resolved_site()},
      {"cut", c.resolved_cut()},
      {"page", {{"samples", c.page_samples}, {"seed", c.page_seed}}},
      {"locate", c.locate},
      {"target", c.target},
      {"threads", c.threads},
      {"output", c.output},
      {"cache_dir", c.cache_dir},
  };
}

/// Parameter bundles for the figure classes: u = 0 fragmentation (fig2)
/// and dynamics (fig3), omega = g (fig4), omega = 2g (fig5) and the
/// frequency sweeps with the L = 12 phase map (fig6).
inline json preset(const std::string& name, const std::string& verb = "") {
  const json g_grid = {2.0, 5.0, 15.0, 30.0, 50.0};
  std::vector<int> sizes;
  for (int l = 4; l <= 16; l += 2) sizes.push_back(l);
  if (name == "fig2")
    return {{"model", {{"L", 16}, {"g", 50.0}, {"u", 0.0}}},
            {"hamiltonian", "eff-u0"},
            {"grid", {{"L", sizes}}},
            {"locate", {"0101010101010101", "1010101010101010", "1111111010000000", "0000000011111111"}}};
  if (name == "fig3")
    return {{"model", {{"L", 16}, {"g", 50.0}, {"u", 0.0}, {"g_over_omega", 1.0}}},
            {"hamiltonian", "eff-u0"},
            {"grid", {{"g", g_grid}}},
            {"initial", {{"kind", "component-sample"}, {"component", "containing:0101010101010101"}, {"count", 0}}},
            {"schedule", {{"cycles", 800}, {"stride", 10}, {"window", {700, 800}}}},
            {"target", "0000000101111111"}};
  if (name == "fig4")
    return {{"model", {{"L", 16}, {"g", 50.0}, {"u", 1.0}, {"g_over_omega", 1.0}}},
            {"hamiltonian", "eff-omega1"},
            {"grid", {{"g", g_grid}, {"L", sizes}}},
            {"initial", {{"kind", "component-sample"}, {"component", "largest"}, {"count", 50}, {"seed", 1}}},
            {"schedule", {{"cycles", 3000}, {"stride", 10}, {"window", {2900, 3000}}}}};
  if (name == "fig5")
    return {{"model", {{"L", 16}, {"g", 50.0}, {"u", 1.0}, {"g_over_omega", 0.5}}},
            {"hamiltonian", "eff-omega2"},
            {"grid", {{"g", g_grid}, {"L", sizes}}},
            {"initial", {{"kind", "component-sample"}, {"component", "largest-odd"}, {"count", 50}, {"seed", 1}}},
            {"schedule", {{"cycles", 3000}, {"stride", 10}, {"window", {2900, 3000}}}}};
  if (name == "fig6") {
    std::vector<double> ratios;
    for (int i = 1; i <= 24; ++i) ratios.push_back(0.1 * i);
    return {{"model", {{"L", verb == "phase-map" ? 12 : 16}, {"g", 50.0}, {"u", 1.0}}},
            {"grid", {{"g", g_grid}, {"g_over_omega", ratios}}},
            {"initial", {{"kind", "infinite-temperature"}, {"seed", 1}}},
            {"schedule", {{"cycles", 6000}, {"stride", 100}, {"window", {5900, 6000}}}}};
  }
  throw ConfigError("unknown preset: " + name);
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

}  // namespace hsf::cli
