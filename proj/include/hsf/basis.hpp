#pragma once

// Fock bases of spinless fermions on an open chain at fixed particle number.
//
// A Fock state |n_0 n_1 ... n_{L-1}> is stored as an integer bit pattern
// with site 0 in the least significant bit. Sectors enumerate states in
// ascending integer order; ranking uses the combinatorial number system so
// state -> index lookup needs no hash table.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hsf/error.hpp"

namespace hsf {

inline constexpr int kMaxSites = 28;

/// Occupation bit pattern over L sites. Sites outside [0, L) read as empty.
class FockState {
 public:
  using bits_type = std::uint64_t;

  constexpr FockState() = default;
  constexpr FockState(bits_type bits, int sites) : bits_(bits), sites_(sites) {}

  /// Parse a site-0-first string of '0'/'1' characters.
  static FockState from_string(std::string_view text) {
    if (text.empty() || text.size() > static_cast<std::size_t>(kMaxSites))
      throw ParameterError("bitstring length must be in [1, 28]");
    bits_type bits = 0;
    for (std::size_t j = 0; j < text.size(); ++j) {
      if (text[j] == '1')
        bits |= bits_type{1} << j;
      else if (text[j] != '0')
        throw ParameterError("bitstring may only contain '0' and '1': " + std::string(text));
    }
    return {bits, static_cast<int>(text.size())};
  }

  [[nodiscard]] constexpr bits_type bits() const noexcept { return bits_; }
  [[nodiscard]] constexpr int sites() const noexcept { return sites_; }

  [[nodiscard]] constexpr int occupation(int j) const noexcept {
    if (j < 0 || j >= sites_) return 0;
    return static_cast<int>((bits_ >> j) & 1U);
  }

  [[nodiscard]] constexpr int particles() const noexcept { return std::popcount(bits_); }

  /// Number of occupied nearest-neighbour pairs, sum_j n_j n_{j+1}.
  [[nodiscard]] constexpr int adjacent_pairs() const noexcept {
    return std::popcount(bits_ & (bits_ >> 1));
  }

  /// Dipole moment sum_j j n_j.
  [[nodiscard]] constexpr int dipole() const noexcept {
    int sum = 0;
    for (bits_type b = bits_; b != 0; b &= b - 1) sum += std::countr_zero(b);
    return sum;
  }

  [[nodiscard]] std::string to_string() const {
    std::string out(static_cast<std::size_t>(sites_), '0');
    for (int j = 0; j < sites_; ++j)
      if (occupation(j)) out[static_cast<std::size_t>(j)] = '1';
    return out;
  }

  friend constexpr bool operator==(const FockState&, const FockState&) = default;

 private:
  bits_type bits_ = 0;
  int sites_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const FockState& s) {
  return os << '|' << s.to_string() << '>';
}

/// Physical parameters of the driven tilted chain, in units hbar = 1.
struct ModelParams {
  double J = 1.0;      ///< bare tunnelling
  double U = 0.0;      ///< nearest-neighbour interaction
  double g = 0.0;      ///< tilt
  double u = 0.0;      ///< drive amplitude, u(t) = u cos(omega t)
  double omega = 1.0;  ///< drive angular frequency
  int L = 0;
  int N = 0;

  [[nodiscard]] double period() const {
    if (!(omega > 0.0)) throw ParameterError("drive frequency omega must be positive");
    return 2.0 * M_PI / omega;
  }

  static ModelParams half_filling(int L) {
    ModelParams p;
    p.L = L;
    p.N = L / 2;
    return p;
  }

  void validate(bool driven = false) const {
    if (L < 1 || L > kMaxSites) throw ParameterError("L must be in [1, 28]");
    if (N < 0 || N > L) throw ParameterError("N must be in [0, L]");
    if (driven && !(omega > 0.0)) throw ParameterError("drive frequency omega must be positive");
  }
};

namespace detail {

using BinomialTable = std::array<std::array<std::uint64_t, kMaxSites + 2>, kMaxSites + 2>;

inline const BinomialTable& binomials() {
  static const BinomialTable table = [] {
    BinomialTable t{};
    for (int n = 0; n <= kMaxSites + 1; ++n) {
      t[n][0] = 1;
      for (int k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k <= n - 1 ? t[n - 1][k] : 0);
    }
    return t;
  }();
  return table;
}

}  // namespace detail

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  return detail::binomials()[n][k];
}

/// All Fock states of L sites holding N particles, ordered by bit pattern.
class SectorBasis {
 public:
  SectorBasis(int sites, int particles) : sites_(sites), particles_(particles) {
    if (sites < 1 || sites > kMaxSites)
      throw ParameterError("sector requires 1 <= L <= 28, got L=" + std::to_string(sites));
    if (particles < 0 || particles > sites)
      throw ParameterError("sector requires 0 <= N <= L, got N=" + std::to_string(particles));
    const auto count = binomial(sites, particles);
    states_.reserve(count);
    if (particles == 0) {
      states_.push_back(0);
      return;
    }
    const FockState::bits_type limit = FockState::bits_type{1} << sites;
    FockState::bits_type v = (FockState::bits_type{1} << particles) - 1;
    while (v < limit) {
      states_.push_back(v);
      // Gosper's hack: next integer with the same popcount.
      const auto c = v & (~v + 1);
      const auto r = v + c;
      v = (((r ^ v) >> 2) / c) | r;
    }
  }

  [[nodiscard]] int sites() const noexcept { return sites_; }
  [[nodiscard]] int particles() const noexcept { return particles_; }
  [[nodiscard]] std::size_t size() const noexcept { return states_.size(); }

  [[nodiscard]] FockState state(std::size_t index) const { return {states_.at(index), sites_}; }
  [[nodiscard]] FockState::bits_type bits(std::size_t index) const noexcept { return states_[index]; }
  [[nodiscard]] const std::vector<FockState::bits_type>& raw_states() const noexcept { return states_; }

  /// Rank of a bit pattern, or nullopt when it is outside this sector.
  [[nodiscard]] std::optional<std::size_t> find(FockState::bits_type bits) const noexcept {
    if (sites_ < 64 && (bits >> sites_) != 0) return std::nullopt;
    if (std::popcount(bits) != particles_) return std::nullopt;
    return rank_unchecked(bits);
  }

  [[nodiscard]] std::size_t index(const FockState& s) const {
    if (s.sites() != sites_) throw ParameterError("state has the wrong number of sites");
    auto idx = find(s.bits());
    if (!idx) throw ParameterError("state " + s.to_string() + " is not in the sector");
    return *idx;
  }

  [[nodiscard]] std::size_t rank_unchecked(FockState::bits_type bits) const noexcept {
    std::size_t rank = 0;
    int i = 1;
    for (auto b = bits; b != 0; b &= b - 1, ++i)
      rank += static_cast<std::size_t>(binomial(std::countr_zero(b), i));
    return rank;
  }

 private:
  int sites_;
  int particles_;
  std::vector<FockState::bits_type> states_;
};

inline SectorBasis enumerate_sector(int L, int N) { return SectorBasis(L, N); }

/// Diagonal energy U sum n_j n_{j+1} - g sum j n_j of a Fock state.
inline double stark_energy(const FockState& s, double U, double g) {
  return U * s.adjacent_pairs() - g * s.dipole();
}

/// Conserved charge E = -sum_j j n_j + sum_j n_j n_{j+1}.
inline int charge_E(const FockState& s) { return s.adjacent_pairs() - s.dipole(); }

/// (-1)^E.
inline int parity_E(const FockState& s) { return (charge_E(s) % 2 == 0) ? 1 : -1; }

/// Site reversal |n_0 ... n_{L-1}> -> |n_{L-1} ... n_0>.
inline FockState reflect(const FockState& s) {
  FockState::bits_type out = 0;
  const int L = s.sites();
  for (auto b = s.bits(); b != 0; b &= b - 1) out |= FockState::bits_type{1} << (L - 1 - std::countr_zero(b));
  return {out, L};
}

/// E_0 = -3N(N-1)/2 - 1, the smallest charge at half filling.
inline int lowest_charge_half_filling(int N) { return -3 * N * (N - 1) / 2 - 1; }

struct SectorQuantumNumbers {
  std::vector<int> charge;  ///< E per basis index
  std::vector<int> parity;  ///< (-1)^E per basis index
  std::map<int, std::vector<std::size_t>> by_charge;  ///< ascending E
  std::map<int, std::vector<std::size_t>> by_parity;  ///< keys -1, +1

  [[nodiscard]] std::size_t charge_group_count() const noexcept { return by_charge.size(); }
};

inline SectorQuantumNumbers sector_quantum_numbers(const SectorBasis& basis) {
  SectorQuantumNumbers q;
  q.charge.resize(basis.size());
  q.parity.resize(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto s = basis.state(i);
    q.charge[i] = charge_E(s);
    q.parity[i] = parity_E(s);
    q.by_charge[q.charge[i]].push_back(i);
    q.by_parity[q.parity[i]].push_back(i);
  }
  return q;
}

/// CSV rows "index,bitstring,E,parity", bitstrings written site 0 first.
inline void write_basis_csv(std::ostream& os, const SectorBasis& basis) {
  os << "index,bitstring,E,parity\n";
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto s = basis.state(i);
    os << i << ',' << s.to_string() << ',' << charge_E(s) << ',' << parity_E(s) << '\n';
  }
}

/// |0101...01> (odd sites filled) and |1010...10> (even sites filled).
inline FockState cdw1_state(int L) {
  FockState::bits_type bits = 0;
  for (int j = 1; j < L; j += 2) bits |= FockState::bits_type{1} << j;
  return {bits, L};
}

inline FockState cdw2_state(int L) {
  FockState::bits_type bits = 0;
  for (int j = 0; j < L; j += 2) bits |= FockState::bits_type{1} << j;
  return {bits, L};
}

}  // namespace hsf
