#pragma once

// Experiment implementations behind the command-line verbs. Each run
// writes CSV/JSON artifacts into the output directory and a manifest last.

#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hsf/cli/config.hpp"
#include "hsf/frag_io.hpp"
#include "hsf/hsf.hpp"

namespace hsf::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Run `tasks` on up to `threads` workers; the first exception is rethrown
/// after all workers finish.
inline void run_pool(std::size_t tasks, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (tasks == 0) return;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, tasks));
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < tasks;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!failure) failure = std::current_exception();
          next = tasks;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Shortest round-trip rendering of a number for file names and CSV cells.
inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  [[nodiscard]] const std::filesystem::path& directory() const noexcept { return dir_; }

  /// Write via a temporary file and rename, so readers never see partial files.
  void write(const std::string& name, const std::string& content) {
    const auto target = dir_ / name;
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw ContractError("cannot write " + tmp.string());
      out << content;
    }
    std::filesystem::rename(tmp, target);
    std::lock_guard lock(m_);
    names_.push_back(name);
  }

  void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

  [[nodiscard]] std::vector<std::string> names() const {
    std::lock_guard lock(m_);
    auto n = names_;
    std::sort(n.begin(), n.end());
    return n;
  }

 private:
  std::filesystem::path dir_;
  mutable std::mutex m_;
  std::vector<std::string> names_;
};

/// Named Hamiltonian whose decomposition supplies the reference values:
/// explicit when configured, otherwise chosen from the drive frequency.
inline EffectiveKind reference_kind(const ExperimentConfig& c, const ModelParams& p) {
  if (c.hamiltonian != "auto") return kind_from_tag(c.hamiltonian);
  if (p.u == 0.0) return EffectiveKind::U0;
  if (resonant(p.omega, p.g, p.omega)) return EffectiveKind::Omega1;
  if (resonant(p.omega, 2.0 * p.g, p.omega)) return EffectiveKind::Omega2;
  return EffectiveKind::U0;
}

inline KrylovDecomposition reference_decomposition(const ExperimentConfig& c, EffectiveKind kind,
                                                   const ModelParams& p, const SectorBasis& b) {
  if (c.cache_dir.empty()) return decompose(kind, p, b, c.threshold);
  return DecompositionCache(c.cache_dir).get(kind, p, b, c.threshold);
}

inline std::size_t select_component(const KrylovDecomposition& d, const SectorBasis& b, const std::string& spec) {
  if (spec == "largest") return d.largest_id();
  if (spec == "largest-even" || spec == "largest-odd") {
    const int want = spec == "largest-even" ? 1 : -1;
    const auto q = sector_quantum_numbers(b);
    std::optional<std::size_t> best;
    for (std::size_t id = 0; id < d.count(); ++id) {
      const auto& comp = d.components[id];
      if (!std::all_of(comp.begin(), comp.end(), [&](std::size_t s) { return q.parity[s] == want; })) continue;
      if (!best || comp.size() > d.size_of(*best)) best = id;
    }
    if (!best) throw ConfigError("no component of the requested parity");
    return *best;
  }
  const std::string prefix = "containing:";
  if (spec.rfind(prefix, 0) == 0) {
    const auto s = FockState::from_string(spec.substr(prefix.size()));
    if (s.sites() != b.sites() || s.particles() != b.particles())
      throw ConfigError("component selector state is not in the sector");
    return locate(b, d, s).id;
  }
  throw ConfigError("unknown component selector: " + spec);
}

struct InitialStates {
  std::vector<StateVector> states;
  std::vector<std::string> labels;
  std::optional<std::size_t> component;
};

inline InitialStates initial_states(const InitialSpec& spec, const KrylovDecomposition& d, const SectorBasis& b) {
  InitialStates out;
  if (spec.kind == "infinite-temperature") {
    out.states.push_back(random_infinite_temperature_state(b, spec.seed));
    out.labels.push_back("infinite-temperature:" + std::to_string(spec.seed));
    return out;
  }
  std::vector<std::size_t> members;
  if (spec.kind == "bitstring") {
    for (const auto& s : spec.bitstrings) members.push_back(b.index(FockState::from_string(s)));
    out.component = d.component_of.at(members.front());
  } else {
    out.component = select_component(d, b, spec.component);
    const auto& comp = d.components[*out.component];
    members = sample_component_states(comp, spec.count == 0 ? comp.size() : spec.count, spec.seed);
  }
  for (auto m : members) {
    out.states.push_back(basis_vector(b, b.state(m)));
    out.labels.push_back(b.state(m).to_string());
  }
  return out;
}

inline std::string series_csv(const TimeSeries& s) {
  std::ostringstream os;
  s.write_csv(os);
  return os.str();
}

namespace detail {

inline nlohmann::json component_json(const KrylovDecomposition& d, const SectorBasis& b, std::size_t id) {
  return component_summary(d, b, sector_quantum_numbers(b), id);
}

/// Window mean of C_L(kT) from an infinite-temperature state, with its
/// decomposition-predicted bound.
struct AutocorrPoint {
  TimeSeries series;
  double saturated = 0.0;
  double bound = 0.0;
  EffectiveKind kind = EffectiveKind::U0;
};

inline AutocorrPoint autocorr_point(const ExperimentConfig& c, const ModelParams& p, const SectorBasis& b) {
  AutocorrPoint r;
  r.kind = reference_kind(c, p);
  const auto d = reference_decomposition(c, r.kind, p, b);
  r.bound = autocorr_bound(d, b, c.resolved_site());
  const auto psi = random_infinite_temperature_state(b, c.initial.seed);
  const auto sched = c.schedule();
  r.series = autocorrelation(p, b, c.resolved_site(), psi, sched, c.propagator);
  const auto [lo, hi] = c.resolved_window();
  r.saturated = saturated_average(r.series, static_cast<double>(lo), static_cast<double>(hi));
  return r;
}

/// Window mean of the half-chain entropy averaged over the initial states.
struct EntropyPoint {
  TimeSeries mean_entropy{"S", "k"};
  TimeSeries mean_fidelity{"fidelity", "k"};
  TimeSeries mean_transfer{"transfer", "k"};
  std::vector<double> density;  ///< window- and state-averaged n_j
  double saturated = 0.0;
  Estimate page_component;
  double page_sector = 0.0;
  EffectiveKind kind = EffectiveKind::U0;
  KrylovDecomposition decomposition;
  InitialStates init;
};

inline EntropyPoint entropy_point(const ExperimentConfig& c, const ModelParams& p, const SectorBasis& b) {
  EntropyPoint r;
  r.kind = reference_kind(c, p);
  r.decomposition = reference_decomposition(c, r.kind, p, b);
  r.init = initial_states(c.initial, r.decomposition, b);
  const BipartitionPlan plan(b, c.resolved_cut());
  r.page_sector = page_value_sector(b.sites(), b.particles(), c.resolved_cut());
  if (r.init.component)
    r.page_component =
        page_value_component(b, r.decomposition.components[*r.init.component], plan, c.page_samples, c.page_seed);
  const auto sched = c.schedule();
  const auto [lo, hi] = c.resolved_window();
  const std::optional<FockState> target =
      c.target.empty() ? std::nullopt : std::optional<FockState>(FockState::from_string(c.target));
  r.density.assign(static_cast<std::size_t>(b.sites()), 0.0);
  std::size_t window_samples = 0;
  const auto initial = r.init.states;
  const double m = static_cast<double>(initial.size());
  evolve_cycles(p, b, c.propagator, initial, sched, [&](double k, std::span<const StateVector> s) {
    double ent = 0.0, fid = 0.0, tr = 0.0;
    const bool in_window = k >= static_cast<double>(lo) && k <= static_cast<double>(hi);
    for (std::size_t i = 0; i < s.size(); ++i) {
      StateVector v = s[i] / s[i].norm();
      ent += entanglement_entropy(v, plan);
      fid += fidelity(v, initial[i]);
      if (target) tr += transfer(v, b, *target);
      if (in_window) {
        const auto n = densities(v, b);
        for (std::size_t j = 0; j < n.size(); ++j) r.density[j] += n[j];
      }
    }
    if (in_window) ++window_samples;
    r.mean_entropy.push(k, ent / m);
    r.mean_fidelity.push(k, fid / m);
    if (target) r.mean_transfer.push(k, tr / m);
  });
  for (auto& x : r.density) x /= m * static_cast<double>(window_samples);
  r.saturated = saturated_average(r.mean_entropy, static_cast<double>(lo), static_cast<double>(hi));
  return r;
}

inline double op_norm(const DenseMatrix& m) {
  Eigen::JacobiSVD<DenseMatrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace detail

class Runner {
 public:
  Runner(ExperimentConfig cfg, std::string verb) : cfg_(std::move(cfg)), verb_(std::move(verb)), out_(cfg_.output) {}

  /// Run the configured experiment and write the manifest.
  void run() {
    const auto& k = cfg_.experiment;
    if (k == "basis-dump")
      basis();
    else if (k == "decompose")
      decomposition();
    else if (k == "scaling")
      scaling();
    else if (k == "ee-dynamics" || k == "density-profile" || k == "fidelity")
      evolve();
    else if (k == "autocorrelation")
      autocorr();
    else if (k == "frequency-sweep")
      sweep();
    else if (k == "phase-map")
      phase_map();
    else if (k == "tdpt-check")
      tdpt();
    else
      throw ConfigError("unknown experiment kind: " + k);
    write_manifest();
  }

  /// Write only the manifest of the resolved configuration.
  void dry_run() {
    summary_ = {{"dry_run", true}};
    write_manifest();
  }

  [[nodiscard]] const nlohmann::json& summary() const noexcept { return summary_; }

 private:
  void basis() {
    const SectorBasis b(cfg_.L, cfg_.particles());
    std::ostringstream os;
    write_basis_csv(os, b);
    out_.write("basis.csv", os.str());
    const auto q = sector_quantum_numbers(b);
    summary_ = {{"dim", b.size()}, {"charge_groups", q.charge_group_count()}};
  }

  void decomposition() {
    const auto p = cfg_.params();
    const SectorBasis b(cfg_.L, cfg_.particles());
    const auto kind = reference_kind(cfg_, p);
    const auto d = reference_decomposition(cfg_, kind, p, b);
    auto j = decomposition_to_json(d, b);
    auto targets = cfg_.locate;
    if (targets.empty() && b.particles() * 2 == b.sites())
      targets = {cdw1_state(b.sites()).to_string(), cdw2_state(b.sites()).to_string()};
    auto& located = j["located"] = nlohmann::json::array();
    for (const auto& s : targets) {
      const auto st = FockState::from_string(s);
      const auto ref = locate(b, d, st);
      located.push_back({{"bitstring", s},
                         {"component", ref.id},
                         {"size", ref.size},
                         {"frozen_pattern", frozen_pattern_check(st)}});
    }
    const auto refl = reflection_pairing(d, b);
    j["reflection"] = {{"invariant_count", refl.invariant_count},
                       {"paired_count", refl.paired_count},
                       {"well_defined", refl.well_defined}};
    j["autocorr_bound"] = {{"site", cfg_.resolved_site()}, {"value", autocorr_bound(d, b, cfg_.resolved_site())}};
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < b.size(); ++i)
      if (frozen_pattern_check(b.state(i)) != (d.size_of(d.component_of[i]) == 1)) ++mismatches;
    j["frozen_pattern_mismatches"] = mismatches;
    out_.write_json("decomposition.json", j);
    std::ostringstream csv;
    csv << "id,size,parity,representative\n";
    for (const auto& comp : j["components"])
      csv << comp["id"].get<std::size_t>() << ',' << comp["size"].get<std::size_t>() << ','
          << comp["parity"].get<int>() << ',' << comp["representative"].get<std::string>() << '\n';
    out_.write("components.csv", csv.str());
    summary_ = {{"hamiltonian_tag", to_tag(kind)}, {"component_count", d.count()}, {"located", located}};
  }

  void scaling() {
    auto sizes = cfg_.L_values;
    if (sizes.empty())
      for (int l = 4; l <= cfg_.L; l += 2) sizes.push_back(l);
    const auto kind = reference_kind(cfg_, cfg_.params());
    std::vector<ScalingRow> rows(sizes.size());
    run_pool(sizes.size(), cfg_.threads, [&](std::size_t i) {
      auto p = cfg_.params();
      p.L = sizes[i];
      p.N = sizes[i] / 2;
      const SectorBasis b(p.L, p.N);
      rows[i] = scaling_row(reference_decomposition(cfg_, kind, p, b), b);
    });
    std::ostringstream os;
    write_scaling_csv(os, rows, to_tag(kind));
    out_.write("scaling.csv", os.str());
    auto& list = summary_["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json row{{"L", r.L}, {"dim", r.dim}, {"largest", r.largest}, {"components", r.components},
                         {"ratio", r.ratio}};
      if (kind == EffectiveKind::Omega1) row["ratio_law"] = omega1_ratio_law(r.L);
      list.push_back(row);
    }
    summary_["hamiltonian_tag"] = to_tag(kind);
    out_.write_json("scaling.json", summary_);
  }

  void evolve() {
    const auto tilts = cfg_.tilts();
    std::vector<nlohmann::json> points(tilts.size());
    run_pool(tilts.size(), cfg_.threads, [&](std::size_t i) {
      const double g = tilts[i];
      const auto p = cfg_.params_at(g, cfg_.omega_at(g));
      const SectorBasis b(cfg_.L, cfg_.particles());
      const auto r = detail::entropy_point(cfg_, p, b);
      const std::string tag = "g" + fmt(g);
      const auto [lo, hi] = cfg_.resolved_window();
      nlohmann::json j{{"g", g},
                       {"omega", p.omega},
                       {"hamiltonian_tag", to_tag(r.kind)},
                       {"initial_states", r.init.labels},
                       {"window", {lo, hi}},
                       {"page_value_sector", r.page_sector},
                       {"saturated_entropy", r.saturated},
                       {"saturated_over_page_sector", r.saturated / r.page_sector},
                       {"density", r.density}};
      if (r.init.component) {
        const auto id = *r.init.component;
        j["component"] = detail::component_json(r.decomposition, b, id);
        j["page_value_component"] = {{"mean", r.page_component.mean},
                                     {"stderr", r.page_component.stderr_},
                                     {"samples", r.page_component.samples},
                                     {"seed", cfg_.page_seed}};
        j["page_component_over_page_sector"] = r.page_component.mean / r.page_sector;
        if (r.page_component.mean > 0.0) j["saturated_over_page_component"] = r.saturated / r.page_component.mean;
        j["density_reference"] = krylov_density(r.decomposition, b, id);
      }
      out_.write("entropy_" + tag + ".csv", series_csv(r.mean_entropy));
      out_.write("fidelity_" + tag + ".csv", series_csv(r.mean_fidelity));
      if (!cfg_.target.empty()) {
        out_.write("transfer_" + tag + ".csv", series_csv(r.mean_transfer));
        j["target"] = cfg_.target;
      }
      std::ostringstream dens;
      dens << "site,value,reference\n" << std::setprecision(12);
      const auto ref = j.contains("density_reference") ? j["density_reference"].get<std::vector<double>>()
                                                       : std::vector<double>(r.density.size(), 0.5);
      for (std::size_t s = 0; s < r.density.size(); ++s) dens << s << ',' << r.density[s] << ',' << ref[s] << '\n';
      out_.write("density_" + tag + ".csv", dens.str());
      out_.write_json("evolve_" + tag + ".json", j);
      points[i] = std::move(j);
    });
    summary_["points"] = points;
  }

  void autocorr() {
    const auto tilts = cfg_.tilts();
    std::vector<nlohmann::json> points(tilts.size());
    run_pool(tilts.size(), cfg_.threads, [&](std::size_t i) {
      const double g = tilts[i];
      const auto p = cfg_.params_at(g, cfg_.omega_at(g));
      const SectorBasis b(cfg_.L, cfg_.particles());
      const auto r = detail::autocorr_point(cfg_, p, b);
      const std::string tag = "g" + fmt(g);
      const auto [lo, hi] = cfg_.resolved_window();
      nlohmann::json j{{"g", g},
                       {"omega", p.omega},
                       {"site", cfg_.resolved_site()},
                       {"seed", cfg_.initial.seed},
                       {"hamiltonian_tag", to_tag(r.kind)},
                       {"bound", r.bound},
                       {"window", {lo, hi}},
                       {"saturated", r.saturated}};
      out_.write("autocorr_" + tag + ".csv", series_csv(r.series));
      out_.write_json("autocorr_" + tag + ".json", j);
      points[i] = std::move(j);
    });
    summary_["points"] = points;
  }

  /// One sweep point: C_L from an infinite-temperature state, or S/S_p
  /// from explicit Fock states.
  nlohmann::json sweep_point(double g, double ratio) const {
    const auto p = cfg_.params_at(g, g / ratio);
    const SectorBasis b(cfg_.L, cfg_.particles());
    if (cfg_.initial.kind == "infinite-temperature") {
      const auto r = detail::autocorr_point(cfg_, p, b);
      return {{"g", g},     {"g_over_omega", ratio},         {"observable", "C_L"},
              {"value", r.saturated}, {"reference", r.bound}, {"hamiltonian_tag", to_tag(r.kind)}};
    }
    const auto r = detail::entropy_point(cfg_, p, b);
    const double ref = r.init.component ? r.page_component.mean / r.page_sector : 1.0;
    return {{"g", g},
            {"g_over_omega", ratio},
            {"observable", "S/S_p"},
            {"value", r.saturated / r.page_sector},
            {"reference", ref},
            {"hamiltonian_tag", to_tag(r.kind)}};
  }

  void sweep() {
    if (cfg_.g_over_omega_values.empty()) throw ConfigError("sweep needs a grid of g_over_omega values");
    const auto& grid = cfg_.g_over_omega_values;
    std::vector<nlohmann::json> points(grid.size());
    run_pool(grid.size(), cfg_.threads, [&](std::size_t i) { points[i] = sweep_point(cfg_.g, grid[i]); });
    std::ostringstream os;
    os << "g_over_omega,value,reference,hamiltonian\n" << std::setprecision(12);
    for (const auto& pt : points)
      os << pt["g_over_omega"].get<double>() << ',' << pt["value"].get<double>() << ','
         << pt["reference"].get<double>() << ',' << pt["hamiltonian_tag"].get<std::string>() << '\n';
    out_.write("sweep.csv", os.str());
    summary_["points"] = points;
    out_.write_json("sweep.json", summary_);
  }

  void phase_map() {
    if (cfg_.g_over_omega_values.empty()) throw ConfigError("phase-map needs a grid of g_over_omega values");
    const auto tilts = cfg_.tilts();
    const auto& ratios = cfg_.g_over_omega_values;
    std::vector<nlohmann::json> points(tilts.size() * ratios.size());
    auto c = cfg_;
    c.initial.kind = "infinite-temperature";
    const Runner sub(c, verb_);
    run_pool(points.size(), cfg_.threads,
             [&](std::size_t i) { points[i] = sub.sweep_point(tilts[i / ratios.size()], ratios[i % ratios.size()]); });
    std::ostringstream os;
    os << "g,g_over_omega,value,reference,hamiltonian\n" << std::setprecision(12);
    for (const auto& pt : points)
      os << pt["g"].get<double>() << ',' << pt["g_over_omega"].get<double>() << ',' << pt["value"].get<double>()
         << ',' << pt["reference"].get<double>() << ',' << pt["hamiltonian_tag"].get<std::string>() << '\n';
    out_.write("phase_map.csv", os.str());
    summary_["points"] = points;
    out_.write_json("phase_map.json", summary_);
  }

  void tdpt() {
    auto Js = cfg_.J_values;
    if (Js.empty()) Js = {1.0, 0.5, 0.25, 0.125};
    const SectorBasis b(cfg_.L, cfg_.particles());
    if (b.size() > kDenseFloquetMaxDim) throw ConfigError("tdpt-check needs a sector of dimension <= 4096");
    std::vector<double> defect(Js.size());
    run_pool(Js.size(), cfg_.threads, [&](std::size_t i) {
      auto p = cfg_.params();
      p.J = Js[i];
      defect[i] = detail::op_norm(floquet_matrix(p, b, cfg_.propagator) - tdpt_first_order_F(p, b));
    });
    std::ostringstream os;
    os << "J,defect,ratio\n" << std::setprecision(12);
    auto& rows = summary_["defects"] = nlohmann::json::array();
    for (std::size_t i = 0; i < Js.size(); ++i) {
      const double ratio = i == 0 ? 0.0 : defect[i - 1] / defect[i];
      os << Js[i] << ',' << defect[i] << ',' << ratio << '\n';
      rows.push_back({{"J", Js[i]}, {"defect", defect[i]}, {"ratio", ratio}});
    }
    out_.write("tdpt.csv", os.str());
    auto& res = summary_["resonances"] = nlohmann::json::array();
    for (double multiple : {1.0, 2.0}) {
      auto p = cfg_.params();
      p.omega = multiple * p.g;
      const bool general = p.U != p.g;
      const double diff =
          (build_HF1(p, b, general).to_dense() - hf1_from_tdpt(p, b).to_dense()).cwiseAbs().maxCoeff();
      res.push_back({{"omega", p.omega}, {"general_form", general}, {"max_coefficient_difference", diff}});
    }
    out_.write_json("tdpt.json", summary_);
  }

  void write_manifest() {
    nlohmann::json m{{"tool", "hsf"},
                     {"version", kToolVersion},
                     {"verb", verb_},
                     {"config", to_json(cfg_)},
                     {"outputs", out_.names()},
                     {"summary", summary_},
                     {"status", "ok"}};
    std::ofstream(out_.directory() / "manifest.json") << m.dump(2) << "\n";
  }

  ExperimentConfig cfg_;
  std::string verb_;
  ArtifactWriter out_;
  nlohmann::json summary_;
};

}  // namespace hsf::cli
