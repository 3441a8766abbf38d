#pragma once

// Serialisation of Krylov decompositions: JSON dumps, scaling tables and a
// disk cache keyed by sector, Hamiltonian tag and parameter hash.
// Requires nlohmann/json (json.hpp) on the include path.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsf/basis.hpp"
#include "hsf/frag.hpp"
#include "hsf/model.hpp"

namespace hsf {

/// Component-level summary: size, charge values, parity (0 when mixed) and
/// the bitstring of the smallest member.
inline nlohmann::json component_summary(const KrylovDecomposition& d, const SectorBasis& b,
                                        const SectorQuantumNumbers& q, std::size_t id) {
  const auto& c = d.components.at(id);
  std::set<int> charges;
  int parity = q.parity[c.front()];
  for (auto s : c) {
    charges.insert(q.charge[s]);
    if (q.parity[s] != parity) parity = 0;
  }
  return {{"id", id},
          {"size", c.size()},
          {"E", std::vector<int>(charges.begin(), charges.end())},
          {"parity", parity},
          {"representative", b.state(c.front()).to_string()}};
}

inline nlohmann::json decomposition_to_json(const KrylovDecomposition& d, const SectorBasis& b) {
  const auto q = sector_quantum_numbers(b);
  const auto st = frag_stats(d, b);
  nlohmann::json j;
  j["L"] = b.sites();
  j["N"] = b.particles();
  j["hamiltonian_tag"] = d.hamiltonian_tag ? std::string(to_tag(*d.hamiltonian_tag)) : std::string("custom");
  j["threshold"] = d.threshold;
  j["sector_dim"] = st.sector_dim;
  j["component_count"] = st.component_count;
  j["largest_id"] = st.largest_id;
  j["largest_dim"] = st.largest_dim;
  j["ratio_to_sector"] = st.ratio_to_sector;
  j["ratio_to_symmetry_sector"] = st.ratio_to_symmetry_sector;
  j["frozen_count"] = st.frozen_count;
  auto& groups = j["charge_groups"] = nlohmann::json::array();
  for (const auto& [e, g] : st.by_charge)
    groups.push_back({{"E", e}, {"states", g.states}, {"components", g.components}, {"largest", g.largest}});
  auto& par = j["parity_groups"] = nlohmann::json::array();
  for (const auto& [p, g] : st.by_parity)
    par.push_back({{"parity", p}, {"states", g.states}, {"components", g.components}, {"largest", g.largest}});
  auto& comps = j["components"] = nlohmann::json::array();
  for (std::size_t id = 0; id < d.count(); ++id) comps.push_back(component_summary(d, b, q, id));
  return j;
}

struct ScalingRow {
  int L = 0;
  std::size_t dim = 0;
  std::size_t largest = 0;
  std::size_t components = 0;
  double ratio = 0.0;
};

inline ScalingRow scaling_row(const KrylovDecomposition& d, const SectorBasis& b) {
  const auto st = frag_stats(d, b);
  return {b.sites(), st.sector_dim, st.largest_dim, st.component_count, st.ratio_to_sector};
}

inline void write_scaling_csv(std::ostream& os, const std::vector<ScalingRow>& rows, std::string_view tag) {
  os << "L,dim,largest,components,ratio,hamiltonian\n";
  std::ostringstream num;
  for (const auto& r : rows) {
    num.str("");
    num << std::setprecision(15) << r.ratio;
    os << r.L << ',' << r.dim << ',' << r.largest << ',' << r.components << ',' << num.str() << ',' << tag << '\n';
  }
}

/// FNV-1a over a text rendering of the model parameters and threshold.
inline std::uint64_t params_hash(const ModelParams& p, double tau) {
  std::ostringstream os;
  os << std::setprecision(17) << "J=" << p.J << ";U=" << p.U << ";g=" << p.g << ";u=" << p.u << ";omega=" << p.omega
     << ";tau=" << tau;
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Decompositions stored as `component_of` arrays, one JSON file per key.
class DecompositionCache {
 public:
  explicit DecompositionCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  [[nodiscard]] const std::filesystem::path& directory() const noexcept { return dir_; }

  [[nodiscard]] std::filesystem::path path_for(EffectiveKind kind, const ModelParams& p, const SectorBasis& b,
                                               double tau) const {
    std::ostringstream name;
    name << "decomp_L" << b.sites() << "_N" << b.particles() << '_' << to_tag(kind) << '_' << std::hex
         << std::setw(16) << std::setfill('0') << params_hash(p, tau) << ".json";
    return dir_ / name.str();
  }

  [[nodiscard]] std::optional<KrylovDecomposition> load(EffectiveKind kind, const ModelParams& p,
                                                        const SectorBasis& b, double tau) const {
    std::ifstream in(path_for(kind, p, b, tau));
    if (!in) return std::nullopt;
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
    if (j.value("L", -1) != b.sites() || j.value("N", -1) != b.particles() ||
        j.value("hamiltonian_tag", std::string()) != to_tag(kind) ||
        j.value("params_hash", std::uint64_t{0}) != params_hash(p, tau))
      return std::nullopt;
    const auto ids = j.at("component_of").get<std::vector<std::size_t>>();
    if (ids.size() != b.size()) return std::nullopt;
    KrylovDecomposition d;
    d.hamiltonian_tag = kind;
    d.threshold = j.at("threshold").get<double>();
    d.component_of = ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] > d.components.size()) return std::nullopt;
      if (ids[i] == d.components.size()) d.components.emplace_back();
      d.components[ids[i]].push_back(i);
    }
    return d;
  }

  void store(EffectiveKind kind, const ModelParams& p, const SectorBasis& b, double tau,
             const KrylovDecomposition& d) const {
    std::filesystem::create_directories(dir_);
    const auto target = path_for(kind, p, b, tau);
    const nlohmann::json j{{"L", b.sites()},
                           {"N", b.particles()},
                           {"hamiltonian_tag", to_tag(kind)},
                           {"params_hash", params_hash(p, tau)},
                           {"threshold", d.threshold},
                           {"component_of", d.component_of}};
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      out << j.dump();
    }
    std::filesystem::rename(tmp, target);
  }

  /// Cached decomposition of the named Hamiltonian, computing and storing
  /// it on a miss.
  KrylovDecomposition get(EffectiveKind kind, const ModelParams& p, const SectorBasis& b, double tau = -1.0) const {
    if (auto hit = load(kind, p, b, tau)) return *std::move(hit);
    auto d = decompose(kind, p, b, tau);
    store(kind, p, b, tau, d);
    return d;
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace hsf
