#pragma once

// Hamiltonians of the driven tilted chain as sparse operators:
//   H0 = J sum_j (c+_j c_{j+1} + h.c.) + U sum_j n_j n_{j+1} - g sum_j j n_j
// together with the density-gated hopping channels and the effective and
// first-order Floquet Hamiltonians built from them.
//
// Fermionic signs: every term moves one particle between neighbouring
// sites, so no Jordan-Wigner string is crossed and all hop amplitudes
// carry a + sign.

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsf/basis.hpp"
#include "hsf/error.hpp"
#include "hsf/ops.hpp"

namespace hsf {

/// Which projector gates the j <-> j+1 hop, by the energy it costs at U = g.
///   P0  = n_{j+2} (1 - n_{j-1})        (|g - U|)
///   Pg  = 1 - (n_{j-1} - n_{j+2})^2    (g)
///   P2g = n_{j-1} (1 - n_{j+2})        (g + U)
enum class HoppingChannel { P0, Pg, P2g };

inline int projector_value(HoppingChannel kind, const FockState& s, int j) {
  const int left = s.occupation(j - 1);
  const int right = s.occupation(j + 2);
  switch (kind) {
    case HoppingChannel::P0: return right * (1 - left);
    case HoppingChannel::Pg: return 1 - (left - right) * (left - right);
    case HoppingChannel::P2g: return left * (1 - right);
  }
  return 0;
}

enum class EffectiveKind { Static, U0, Omega1, Omega2Full, Omega2, HF1_Ug, HF1_general };

inline std::string_view to_tag(EffectiveKind kind) {
  switch (kind) {
    case EffectiveKind::Static: return "static";
    case EffectiveKind::U0: return "eff-u0";
    case EffectiveKind::Omega1: return "eff-omega1";
    case EffectiveKind::Omega2Full: return "eff-omega2-full";
    case EffectiveKind::Omega2: return "eff-omega2";
    case EffectiveKind::HF1_Ug: return "hf1";
    case EffectiveKind::HF1_general: return "hf1-general";
  }
  return "unknown";
}

inline EffectiveKind kind_from_tag(std::string_view tag) {
  for (auto k : {EffectiveKind::Static, EffectiveKind::U0, EffectiveKind::Omega1, EffectiveKind::Omega2Full,
                 EffectiveKind::Omega2, EffectiveKind::HF1_Ug, EffectiveKind::HF1_general})
    if (to_tag(k) == tag) return k;
  throw ParameterError("unknown hamiltonian tag: " + std::string(tag));
}

inline constexpr double kResonanceRelTol = 1e-9;
inline constexpr double kNearResonanceRelTol = 1e-6;

/// Kronecker delta between two energies, relative to the drive frequency.
inline bool resonant(double a, double b, double omega) { return std::abs(a - b) <= kResonanceRelTol * omega; }

/// Warn when |a - b| is small but not a resonance; 1/(a-b) is then huge.
inline void check_near_resonance(double a, double b, double omega, std::string_view what) {
  const double rel = std::abs(a - b) / omega;
  if (rel > kResonanceRelTol && rel < kNearResonanceRelTol)
    warn("near-resonant " + std::string(what) + ": |delta - omega|/omega = " + std::to_string(rel) +
         " (first-order coefficients diverge)");
}

namespace detail {

inline void check_basis(const ModelParams& p, const SectorBasis& b) {
  if (p.L != b.sites() || p.N != b.particles())
    throw ParameterError("model parameters (L=" + std::to_string(p.L) + ", N=" + std::to_string(p.N) +
                         ") do not match the basis");
}

inline void require_u_equals_g(const ModelParams& p, std::string_view what) {
  if (std::abs(p.U - p.g) > kResonanceRelTol * std::max({1.0, std::abs(p.g), std::abs(p.U)}))
    throw ParameterError(std::string(what) + " requires U == g");
}

/// Emit (target, source, amplitude) for every rightward hop j -> j+1
/// accepted by `forward`, and the conjugate leftward entry.
template <class Forward>
void append_hops(const SectorBasis& b, std::vector<Triplet>& out, Forward&& forward) {
  const int L = b.sites();
  for (std::size_t src = 0; src < b.size(); ++src) {
    const auto bits = b.bits(src);
    const FockState s{bits, L};
    for (int j = 0; j + 1 < L; ++j) {
      if (s.occupation(j) != 1 || s.occupation(j + 1) != 0) continue;
      const std::optional<complex> amp = forward(s, j);
      if (!amp || *amp == complex(0.0)) continue;
      const auto moved = bits ^ ((FockState::bits_type{1} << j) | (FockState::bits_type{1} << (j + 1)));
      const std::size_t dst = b.rank_unchecked(moved);
      out.push_back({dst, src, *amp});
      out.push_back({src, dst, std::conj(*amp)});
    }
  }
}

inline std::vector<Triplet> channel_triplets(HoppingChannel kind, const SectorBasis& b, complex amplitude) {
  std::vector<Triplet> t;
  append_hops(b, t, [&](const FockState& s, int j) -> std::optional<complex> {
    if (projector_value(kind, s, j) == 1) return amplitude;
    return std::nullopt;
  });
  return t;
}

inline HoppingChannel channel_of_hop(const FockState& s, int j) {
  for (auto k : {HoppingChannel::P0, HoppingChannel::Pg, HoppingChannel::P2g})
    if (projector_value(k, s, j) == 1) return k;
  return HoppingChannel::Pg;  // unreachable: the projectors partition all hops
}

}  // namespace detail

/// Stark-plus-interaction energies E_n of every basis state.
inline std::vector<double> diagonal_energies(const ModelParams& p, const SectorBasis& b) {
  std::vector<double> e(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) e[i] = stark_energy(b.state(i), p.U, p.g);
  return e;
}

/// Unconstrained nearest-neighbour hopping H_J / J.
inline SparseOperator build_hopping(const SectorBasis& b) {
  std::vector<Triplet> t;
  detail::append_hops(b, t, [](const FockState&, int) -> std::optional<complex> { return complex(1.0); });
  auto op = SparseOperator::assemble(b.size(), std::move(t));
  op.set_hermitian_unchecked(true);
  return op;
}

/// Projected hopping with unit amplitude.
inline SparseOperator build_channel(HoppingChannel kind, const SectorBasis& b) {
  auto op = SparseOperator::assemble(b.size(), detail::channel_triplets(kind, b, 1.0));
  op.set_hermitian_unchecked(true);
  return op;
}

inline SparseOperator build_H0(const ModelParams& p, const SectorBasis& b) {
  detail::check_basis(p, b);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < b.size(); ++i) t.push_back({i, i, stark_energy(b.state(i), p.U, p.g)});
  detail::append_hops(b, t, [&](const FockState&, int) -> std::optional<complex> { return complex(p.J); });
  auto op = SparseOperator::assemble(b.size(), std::move(t));
  op.set_hermitian_unchecked(true);
  return op;
}

/// Hop coefficients of the U = g first-order Floquet Hamiltonian, for the
/// rightward hop c+_{j+1} c_j gated by P0, Pg and P2g respectively.
struct FloquetHopCoefficients {
  complex p0;
  complex pg;
  complex p2g;
};

inline FloquetHopCoefficients hf1_coefficients_u_equals_g(const ModelParams& p) {
  const double T = p.period();
  const double w = p.omega;
  const double g = p.g;
  const double J = p.J;
  const double u = p.u;
  const complex I(0.0, 1.0);
  check_near_resonance(g, w, w, "g vs omega");
  check_near_resonance(2.0 * g, w, w, "2g vs omega");
  const double d1 = resonant(g, w, w) ? 1.0 : 0.0;
  const double d2 = resonant(2.0 * g, w, w) ? 1.0 : 0.0;
  auto bracket = [&](double delta, double d) {
    double sum = 1.0 / delta + u / (2.0 * (delta + w));
    if (d == 0.0) sum += u * (1.0 - d) / (2.0 * (delta - w));
    return sum;
  };
  FloquetHopCoefficients c;
  c.p0 = J;
  c.pg = (I * J / T) * (std::exp(-I * g * T) - 1.0) * bracket(g, d1) + u * J / 2.0 * d1;
  c.p2g = (I * J / T) * (std::exp(-I * 2.0 * g * T) - 1.0) * bracket(2.0 * g, d2) + u * J / 2.0 * d2;
  return c;
}

/// General-U form: channels with barriers g - U, g and g + U.
inline FloquetHopCoefficients hf1_coefficients_general(const ModelParams& p) {
  const double T = p.period();
  const double w = p.omega;
  const double J = p.J;
  const double u = p.u;
  const complex I(0.0, 1.0);
  auto channel = [&](double delta, bool intrinsic_allowed) {
    // delta is the energy released by the rightward hop.
    const bool zero = intrinsic_allowed && resonant(delta, 0.0, w);
    check_near_resonance(std::abs(delta), w, w, "channel barrier vs omega");
    const double dw = resonant(std::abs(delta), w, w) ? 1.0 : 0.0;
    complex c = (zero ? 1.0 : 0.0) + u / 2.0 * dw;
    if (!zero) {
      double bracket = 1.0 / delta;
      if (dw == 0.0) bracket += u * (1.0 - dw) * delta / ((delta + w) * (delta - w));
      c += (I * (std::exp(-I * delta * T) - 1.0) / T) * bracket;
    }
    return J * c;
  };
  FloquetHopCoefficients c;
  c.p0 = channel(p.g - p.U, true);
  c.pg = channel(p.g, false);
  c.p2g = channel(p.g + p.U, false);
  return c;
}

/// Fold an energy into the symmetric zone (-omega/2, omega/2].
inline double fold_quasienergy(double e, double omega) {
  return e - omega * std::ceil(e / omega - 0.5);
}

/// First-order Floquet Hamiltonian H_omega + (i/T) F1 with "+ h.c." hops.
inline SparseOperator build_HF1(const ModelParams& p, const SectorBasis& b, bool general) {
  detail::check_basis(p, b);
  if (!(p.omega > 0.0)) throw ParameterError("build_HF1 requires omega > 0");
  if (!general) detail::require_u_equals_g(p, "hf1");
  const auto coeff = general ? hf1_coefficients_general(p) : hf1_coefficients_u_equals_g(p);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < b.size(); ++i)
    t.push_back({i, i, fold_quasienergy(stark_energy(b.state(i), p.U, p.g), p.omega)});
  detail::append_hops(b, t, [&](const FockState& s, int j) -> std::optional<complex> {
    switch (detail::channel_of_hop(s, j)) {
      case HoppingChannel::P0: return coeff.p0;
      case HoppingChannel::Pg: return coeff.pg;
      case HoppingChannel::P2g: return coeff.p2g;
    }
    return std::nullopt;
  });
  auto op = SparseOperator::assemble(b.size(), std::move(t));
  op.set_hermitian_unchecked(op.hermiticity_residual() <= kHermitianTolerance);
  return op;
}

inline SparseOperator build_effective(EffectiveKind kind, const ModelParams& p, const SectorBasis& b) {
  detail::check_basis(p, b);
  const double J = p.J;
  std::vector<Triplet> t;
  auto add_channel = [&](HoppingChannel ch, complex amp) {
    auto more = detail::channel_triplets(ch, b, amp);
    t.insert(t.end(), more.begin(), more.end());
  };
  switch (kind) {
    case EffectiveKind::Static: return build_H0(p, b);
    case EffectiveKind::HF1_Ug: return build_HF1(p, b, false);
    case EffectiveKind::HF1_general: return build_HF1(p, b, true);
    case EffectiveKind::U0:
      add_channel(HoppingChannel::P0, J);
      break;
    case EffectiveKind::Omega1:
      detail::require_u_equals_g(p, "eff-omega1");
      add_channel(HoppingChannel::P0, J);
      add_channel(HoppingChannel::Pg, p.u * J / 2.0);
      break;
    case EffectiveKind::Omega2Full: {
      detail::require_u_equals_g(p, "eff-omega2-full");
      for (std::size_t i = 0; i < b.size(); ++i)
        t.push_back({i, i, p.g / 2.0 * (1.0 - parity_E(b.state(i)))});
      add_channel(HoppingChannel::P0, J);
      // -i a P^(g) (c+_{j+1} c_j - c+_j c_{j+1}), a = 2J(3-u)/(3 pi)
      add_channel(HoppingChannel::Pg, complex(0.0, -2.0 * J * (3.0 - p.u) / (3.0 * M_PI)));
      add_channel(HoppingChannel::P2g, p.u * J / 2.0);
      break;
    }
    case EffectiveKind::Omega2:
      detail::require_u_equals_g(p, "eff-omega2");
      add_channel(HoppingChannel::P0, J);
      add_channel(HoppingChannel::P2g, p.u * J / 2.0);
      break;
  }
  auto op = SparseOperator::assemble(b.size(), std::move(t));
  op.set_hermitian_unchecked(true);
  return op;
}

}  // namespace hsf
