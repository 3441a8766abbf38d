#pragma once

// Krylov-subspace fragmentation of a particle-number sector.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hsf/basis.hpp"
#include "hsf/error.hpp"
#include "hsf/model.hpp"
#include "hsf/ops.hpp"

namespace hsf {

/// Components of the graph whose edges are the above-threshold
/// off-diagonal entries of a Hamiltonian. Component ids follow the
/// smallest basis index they contain.
struct KrylovDecomposition {
  std::vector<std::size_t> component_of;
  std::vector<std::vector<std::size_t>> components;
  std::optional<EffectiveKind> hamiltonian_tag;
  double threshold = 0.0;

  [[nodiscard]] std::size_t count() const noexcept { return components.size(); }
  [[nodiscard]] std::size_t size_of(std::size_t id) const { return components.at(id).size(); }
  [[nodiscard]] std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s;
    s.reserve(components.size());
    for (const auto& c : components) s.push_back(c.size());
    return s;
  }
  [[nodiscard]] std::size_t largest_id() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < components.size(); ++k)
      if (components[k].size() > components[best].size()) best = k;
    return best;
  }
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned char> rank_;
};

inline double default_threshold(const SparseOperator& H) { return 1e-12 * H.max_abs(); }

}  // namespace detail

/// Pass `tau < 0` for the default 1e-12 * max|H_ij|.
inline KrylovDecomposition decompose(const SparseOperator& H, const SectorBasis& b, double tau = -1.0,
                                     std::optional<EffectiveKind> tag = std::nullopt) {
  if (H.dim() != b.size()) throw ContractError("operator and basis dimensions differ");
  if (!H.hermitian()) throw ContractError("decompose requires a hermitian operator");
  if (tau < 0.0) tau = detail::default_threshold(H);
  const std::size_t n = b.size();
  detail::DisjointSets sets(n);
  const auto rp = H.row_ptr();
  const auto cols = H.cols();
  const auto vals = H.values();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k)
      if (cols[k] != r && std::abs(vals[k]) > tau) sets.unite(r, cols[k]);

  KrylovDecomposition d;
  d.hamiltonian_tag = tag;
  d.threshold = tau;
  d.component_of.assign(n, 0);
  std::vector<std::size_t> id_of_root(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = sets.find(i);
    if (id_of_root[root] == n) {
      id_of_root[root] = d.components.size();
      d.components.emplace_back();
    }
    d.component_of[i] = id_of_root[root];
    d.components[id_of_root[root]].push_back(i);
  }
  return d;
}

/// Decompose the sector under one of the named model Hamiltonians.
inline KrylovDecomposition decompose(EffectiveKind kind, const ModelParams& p, const SectorBasis& b,
                                     double tau = -1.0) {
  return decompose(build_effective(kind, p, b), b, tau, kind);
}

/// Re-scan every stored entry: true when no above-threshold element links
/// two components and every state is assigned exactly once.
inline bool verify_partition(const KrylovDecomposition& d, const SparseOperator& H) {
  const std::size_t n = H.dim();
  if (d.component_of.size() != n) return false;
  std::vector<int> seen(n, 0);
  for (std::size_t id = 0; id < d.components.size(); ++id)
    for (auto s : d.components[id]) {
      if (s >= n || d.component_of[s] != id) return false;
      ++seen[s];
    }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) return false;
  const auto rp = H.row_ptr();
  const auto cols = H.cols();
  const auto vals = H.values();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k)
      if (std::abs(vals[k]) > d.threshold && d.component_of[r] != d.component_of[cols[k]]) return false;
  return true;
}

struct GroupStats {
  std::size_t states = 0;
  std::size_t components = 0;  ///< components lying entirely inside the group
  std::size_t largest = 0;
};

struct FragStats {
  std::size_t sector_dim = 0;
  std::size_t component_count = 0;
  std::size_t largest_id = 0;
  std::size_t largest_dim = 0;
  double ratio_to_sector = 0.0;
  /// largest_dim over the size of the smallest symmetry group (fixed E,
  /// else fixed parity, else the sector) that contains the largest component.
  double ratio_to_symmetry_sector = 0.0;
  std::size_t frozen_count = 0;
  std::map<int, GroupStats> by_charge;
  std::map<int, GroupStats> by_parity;
};

inline FragStats frag_stats(const KrylovDecomposition& d, const SectorBasis& b) {
  if (d.component_of.size() != b.size()) throw ContractError("decomposition does not match the basis");
  const auto q = sector_quantum_numbers(b);
  FragStats st;
  st.sector_dim = b.size();
  st.component_count = d.count();
  st.largest_id = d.largest_id();
  st.largest_dim = d.size_of(st.largest_id);
  st.ratio_to_sector = static_cast<double>(st.largest_dim) / static_cast<double>(b.size());
  for (const auto& [e, idx] : q.by_charge) st.by_charge[e].states = idx.size();
  for (const auto& [par, idx] : q.by_parity) st.by_parity[par].states = idx.size();
  for (std::size_t id = 0; id < d.count(); ++id) {
    const auto& c = d.components[id];
    if (c.size() == 1) ++st.frozen_count;
    const int e = q.charge[c.front()];
    const int par = q.parity[c.front()];
    const bool same_e = std::all_of(c.begin(), c.end(), [&](std::size_t s) { return q.charge[s] == e; });
    const bool same_p = std::all_of(c.begin(), c.end(), [&](std::size_t s) { return q.parity[s] == par; });
    if (same_e) {
      auto& g = st.by_charge[e];
      ++g.components;
      g.largest = std::max(g.largest, c.size());
    }
    if (same_p) {
      auto& g = st.by_parity[par];
      ++g.components;
      g.largest = std::max(g.largest, c.size());
    }
    if (id == st.largest_id) {
      std::size_t group = b.size();
      if (same_e)
        group = q.by_charge.at(e).size();
      else if (same_p)
        group = q.by_parity.at(par).size();
      st.ratio_to_symmetry_sector = static_cast<double>(st.largest_dim) / static_cast<double>(group);
    }
  }
  return st;
}

struct ComponentRef {
  std::size_t id;
  std::size_t size;
};

inline ComponentRef locate(const SectorBasis& b, const KrylovDecomposition& d, const FockState& s) {
  const auto idx = b.index(s);
  const auto id = d.component_of.at(idx);
  return {id, d.size_of(id)};
}

/// True when the chain (with an empty site prepended) contains neither a
/// 0011 nor a 0101 window, i.e. no interaction-neutral hop is available.
inline bool frozen_pattern_check(const FockState& s) {
  const std::string padded = "0" + s.to_string();
  return padded.find("0011") == std::string::npos && padded.find("0101") == std::string::npos;
}

/// Mean occupation of each site over the Fock states of one component.
inline std::vector<double> krylov_density(const KrylovDecomposition& d, const SectorBasis& b, std::size_t id) {
  const auto& c = d.components.at(id);
  std::vector<double> n(static_cast<std::size_t>(b.sites()), 0.0);
  for (auto s : c) {
    const auto st = b.state(s);
    for (int j = 0; j < b.sites(); ++j) n[static_cast<std::size_t>(j)] += st.occupation(j);
  }
  for (auto& x : n) x /= static_cast<double>(c.size());
  return n;
}

/// (1/D) sum_K [sum_{s in K} (n_j(s) - 1/2)]^2 / D_K.
inline double autocorr_bound(const KrylovDecomposition& d, const SectorBasis& b, int site) {
  if (site < 0 || site >= b.sites()) throw ParameterError("site index out of range");
  double total = 0.0;
  for (const auto& c : d.components) {
    double tr = 0.0;
    for (auto s : c) tr += b.state(s).occupation(site) - 0.5;
    total += tr * tr / static_cast<double>(c.size());
  }
  return total / static_cast<double>(b.size());
}

struct ReflectionReport {
  std::vector<std::size_t> image;  ///< component id of R(K) for each K
  std::vector<int> parity;         ///< +1 / -1, or 0 when a component mixes parities
  std::size_t invariant_count = 0;
  std::size_t paired_count = 0;    ///< number of unordered pairs K != R(K)
  bool well_defined = true;        ///< R maps every component onto a single component
};

inline ReflectionReport reflection_pairing(const KrylovDecomposition& d, const SectorBasis& b) {
  ReflectionReport r;
  r.image.resize(d.count());
  r.parity.resize(d.count());
  const auto q = sector_quantum_numbers(b);
  for (std::size_t id = 0; id < d.count(); ++id) {
    const auto& c = d.components[id];
    const auto first = d.component_of[b.index(reflect(b.state(c.front())))];
    for (auto s : c)
      if (d.component_of[b.index(reflect(b.state(s)))] != first) r.well_defined = false;
    if (first != id && d.size_of(first) != c.size()) r.well_defined = false;
    r.image[id] = first;
    int par = q.parity[c.front()];
    for (auto s : c)
      if (q.parity[s] != par) par = 0;
    r.parity[id] = par;
    if (first == id)
      ++r.invariant_count;
    else if (first > id)
      ++r.paired_count;
  }
  return r;
}

/// Largest-component ratio 8(L+1)/((L+2)(L+4)) of the single-channel
/// resonant Hamiltonian at half filling.
inline double omega1_ratio_law(int L) {
  return 8.0 * (L + 1) / (static_cast<double>(L + 2) * static_cast<double>(L + 4));
}

}  // namespace hsf
