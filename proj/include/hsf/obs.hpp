#pragma once

// State diagnostics: half-chain entanglement, Page values, densities,
// overlaps and infinite-temperature autocorrelations.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "hsf/basis.hpp"
#include "hsf/error.hpp"
#include "hsf/floquet.hpp"
#include "hsf/ops.hpp"
#include "hsf/timeseries.hpp"

namespace hsf {

inline constexpr double kNormTolerance = 1e-8;

inline void require_unit(const StateVector& v, std::string_view what) {
  if (std::abs(v.norm() - 1.0) > kNormTolerance) throw ContractError(std::string(what) + " requires a unit vector");
}

/// Split of the sector into left sites [0, cut) and right sites [cut, L).
/// Amplitudes with n_A left particles form a d_A(n_A) x d_B(N - n_A) block.
class BipartitionPlan {
 public:
  struct Place {
    std::size_t block;
    std::size_t row;
    std::size_t col;
  };

  struct Block {
    int n_left = 0;
    std::size_t rows = 0;  ///< d_A
    std::size_t cols = 0;  ///< d_B
  };

  BipartitionPlan(const SectorBasis& b, int cut) : cut_(cut), sites_(b.sites()) {
    if (cut < 0 || cut > b.sites()) throw ParameterError("cut must lie in [0, L]");
    const int N = b.particles();
    const int right = b.sites() - cut;
    for (int na = 0; na <= N; ++na) {
      const auto da = binomial(cut, na);
      const auto db = binomial(right, N - na);
      if (da == 0 || db == 0) continue;
      block_of_n_[na] = blocks_.size();
      blocks_.push_back({na, da, db});
    }
    place_.resize(b.size());
    const FockState::bits_type mask = (FockState::bits_type{1} << cut) - 1;
    std::vector<SectorBasis> left_bases, right_bases;
    for (const auto& blk : blocks_) {
      left_bases.emplace_back(std::max(cut, 1), blk.n_left);
      right_bases.emplace_back(std::max(right, 1), N - blk.n_left);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto bits = b.bits(i);
      const auto a = bits & mask;
      const auto rest = bits >> cut;
      const int na = std::popcount(a);
      const auto k = block_of_n_.at(na);
      place_[i] = {k, left_bases[k].rank_unchecked(a), right_bases[k].rank_unchecked(rest)};
    }
  }

  static BipartitionPlan half_chain(const SectorBasis& b) { return BipartitionPlan(b, b.sites() / 2); }

  [[nodiscard]] int cut() const noexcept { return cut_; }
  [[nodiscard]] int sites() const noexcept { return sites_; }
  [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }
  [[nodiscard]] std::size_t total() const noexcept { return place_.size(); }

  /// Compact layout of a subset of basis states: each touched block keeps
  /// only the rows and columns the subset occupies.
  struct Restricted {
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    std::vector<Place> place;
  };

  [[nodiscard]] Restricted restrict_to(std::span<const std::size_t> states) const {
    Restricted r;
    std::map<std::size_t, std::size_t> block_id;
    std::vector<std::map<std::size_t, std::size_t>> rows, cols;
    r.place.reserve(states.size());
    for (auto s : states) {
      const auto& p = place_.at(s);
      auto [it, fresh] = block_id.try_emplace(p.block, rows.size());
      if (fresh) {
        rows.emplace_back();
        cols.emplace_back();
      }
      const auto k = it->second;
      const auto ri = rows[k].try_emplace(p.row, rows[k].size()).first->second;
      const auto ci = cols[k].try_emplace(p.col, cols[k].size()).first->second;
      r.place.push_back({k, ri, ci});
    }
    for (std::size_t k = 0; k < rows.size(); ++k) r.shapes.emplace_back(rows[k].size(), cols[k].size());
    return r;
  }

  /// Amplitude blocks of v restricted to each left particle number.
  [[nodiscard]] std::vector<DenseMatrix> split(const StateVector& v) const {
    if (static_cast<std::size_t>(v.size()) != place_.size()) throw ContractError("state does not match the plan");
    std::vector<DenseMatrix> m;
    m.reserve(blocks_.size());
    for (const auto& blk : blocks_)
      m.push_back(DenseMatrix::Zero(static_cast<Eigen::Index>(blk.rows), static_cast<Eigen::Index>(blk.cols)));
    for (std::size_t i = 0; i < place_.size(); ++i) {
      const auto& p = place_[i];
      m[p.block](static_cast<Eigen::Index>(p.row), static_cast<Eigen::Index>(p.col)) = v[static_cast<Eigen::Index>(i)];
    }
    return m;
  }

 private:
  int cut_;
  int sites_;
  std::vector<Block> blocks_;
  std::map<int, std::size_t> block_of_n_;
  std::vector<Place> place_;
};

enum class Side { A, B, Smaller };

/// -sum p ln p over eigenvalues of one block's reduced density matrix.
inline double block_entropy(const DenseMatrix& m, Side side) {
  if (m.size() == 0) return 0.0;
  bool use_a = side == Side::A || (side == Side::Smaller && m.rows() <= m.cols());
  const DenseMatrix rho = use_a ? DenseMatrix(m * m.adjoint()) : DenseMatrix(m.adjoint() * m);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(rho, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double p = es.eigenvalues()[k];
    if (p > 1e-300) s -= p * std::log(p);
  }
  return s;
}

inline double entanglement_entropy(const StateVector& v, const BipartitionPlan& plan, Side side = Side::Smaller) {
  require_unit(v, "entanglement_entropy");
  double s = 0.0;
  for (const auto& m : plan.split(v)) s += block_entropy(m, side);
  return std::max(s, 0.0);
}

/// -sum_{n_A} (d_A d_B / D) ln(d_B / D) - 1/2 at fixed L, N and cut.
inline double page_value_sector(int L, int N, int cut) {
  const double D = static_cast<double>(binomial(L, N));
  double s = 0.0;
  for (int na = 0; na <= N; ++na) {
    const double da = static_cast<double>(binomial(cut, na));
    const double db = static_cast<double>(binomial(L - cut, N - na));
    if (da == 0.0 || db == 0.0) continue;
    s -= da * db / D * std::log(db / D);
  }
  return s - 0.5;
}

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/// Average entropy of normalised real-Gaussian superpositions of the
/// Fock states in `component`. `samples == 0` draws D_K states.
inline Estimate page_value_component(const SectorBasis& b, std::span<const std::size_t> component,
                                     const BipartitionPlan& plan, std::size_t samples = 0,
                                     std::uint64_t seed = 1) {
  if (component.empty()) throw ParameterError("component is empty");
  if (plan.total() != b.size()) throw ContractError("plan does not match the basis");
  if (samples == 0) samples = component.size();
  Estimate e;
  e.samples = samples;
  if (component.size() == 1) return e;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const auto layout = plan.restrict_to(component);
  std::vector<DenseMatrix> blocks;
  for (const auto& [r, c] : layout.shapes)
    blocks.push_back(DenseMatrix::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
  std::vector<double> z(component.size());
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    double norm2 = 0.0;
    for (auto& x : z) {
      x = gauss(rng);
      norm2 += x * x;
    }
    const double scale = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const auto& p = layout.place[i];
      blocks[p.block](static_cast<Eigen::Index>(p.row), static_cast<Eigen::Index>(p.col)) = z[i] * scale;
    }
    double ent = 0.0;
    for (const auto& m : blocks) ent += block_entropy(m, Side::Smaller);
    ent = std::max(ent, 0.0);
    sum += ent;
    sum2 += ent * ent;
  }
  const double n = static_cast<double>(samples);
  e.mean = sum / n;
  if (samples > 1) {
    const double var = std::max(0.0, (sum2 - n * e.mean * e.mean) / (n - 1.0));
    e.stderr_ = std::sqrt(var / n);
  }
  return e;
}

inline std::vector<double> densities(const StateVector& v, const SectorBasis& b) {
  if (static_cast<std::size_t>(v.size()) != b.size()) throw ContractError("state does not match the basis");
  std::vector<double> n(static_cast<std::size_t>(b.sites()), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double w = std::norm(v[static_cast<Eigen::Index>(i)]);
    if (w == 0.0) continue;
    for (auto bits = b.bits(i); bits != 0; bits &= bits - 1) n[static_cast<std::size_t>(std::countr_zero(bits))] += w;
  }
  return n;
}

inline double fidelity(const StateVector& v, const StateVector& ref) {
  if (v.size() != ref.size()) throw ContractError("fidelity dimension mismatch");
  return std::norm(ref.dot(v));
}

/// |<target|v>|^2 for a basis state.
inline double transfer(const StateVector& v, const SectorBasis& b, const FockState& target) {
  if (static_cast<std::size_t>(v.size()) != b.size()) throw ContractError("transfer dimension mismatch");
  return std::norm(v[static_cast<Eigen::Index>(b.index(target))]);
}

inline StateVector basis_vector(const SectorBasis& b, const FockState& s) {
  StateVector v = StateVector::Zero(static_cast<Eigen::Index>(b.size()));
  v[static_cast<Eigen::Index>(b.index(s))] = 1.0;
  return v;
}

inline StateVector random_infinite_temperature_state(const SectorBasis& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  StateVector v(static_cast<Eigen::Index>(b.size()));
  for (auto& c : v) {
    const double re = gauss(rng);
    c = complex(re, gauss(rng));
  }
  return v / v.norm();
}

/// (n_j - 1/2) v.
inline StateVector density_fluctuation(const StateVector& v, const SectorBasis& b, int site) {
  StateVector w = v;
  for (std::size_t i = 0; i < b.size(); ++i)
    w[static_cast<Eigen::Index>(i)] *= ((b.bits(i) >> site) & 1U) ? 0.5 : -0.5;
  return w;
}

namespace detail {

inline complex fluctuation_overlap(const StateVector& a, const StateVector& bvec, const SectorBasis& b, int site) {
  complex acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    acc += std::conj(a[k]) * bvec[k] * (((b.bits(i) >> site) & 1U) ? 0.5 : -0.5);
  }
  return acc;
}

}  // namespace detail

/// C_j at stroboscopic cycles (driven, or u = 0 with period 2 pi / omega).
/// The imaginary part is stored in `imag` when requested.
inline TimeSeries autocorrelation(const ModelParams& p, const SectorBasis& b, int site, const StateVector& psi,
                                  std::span<const std::size_t> cycles, const PropagatorConfig& cfg = {},
                                  TimeSeries* imag = nullptr) {
  require_unit(psi, "autocorrelation");
  if (site < 0 || site >= b.sites()) throw ParameterError("site index out of range");
  TimeSeries re("C_" + std::to_string(site), "k");
  if (imag) *imag = TimeSeries("Im C_" + std::to_string(site), "k");
  std::vector<StateVector> pair{psi, density_fluctuation(psi, b, site)};
  auto record = [&](double k, std::span<const StateVector> s) {
    const auto c = detail::fluctuation_overlap(s[0], s[1], b, site);
    re.push(k, c.real());
    if (imag) imag->push(k, c.imag());
  };
  evolve_cycles(p, b, cfg, std::move(pair), cycles, record);
  return re;
}

/// C_j at continuous times under the static Hamiltonian.
inline TimeSeries autocorrelation_static(const ModelParams& p, const SectorBasis& b, int site,
                                         const StateVector& psi, std::span<const double> times) {
  require_unit(psi, "autocorrelation");
  if (site < 0 || site >= b.sites()) throw ParameterError("site index out of range");
  TimeSeries re("C_" + std::to_string(site), "t");
  StaticEvolver ev(p, b);
  ev.run({psi, density_fluctuation(psi, b, site)}, times, [&](double t, std::span<const StateVector> s) {
    re.push(t, detail::fluctuation_overlap(s[0], s[1], b, site).real());
  });
  return re;
}

/// Mean of the samples with x in [lo, hi].
inline double saturated_average(const TimeSeries& s, double lo, double hi) {
  if (s.x.empty() || lo > hi || lo < s.x.front() || hi > s.x.back())
    throw ParameterError("averaging window outside the sampled range");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.x.size(); ++i)
    if (s.x[i] >= lo && s.x[i] <= hi) {
      sum += s.y[i];
      ++n;
    }
  if (n == 0) throw ParameterError("averaging window contains no samples");
  return sum / static_cast<double>(n);
}

/// `count` distinct members of `component` drawn uniformly (all of them if
/// the component is smaller), in drawing order.
inline std::vector<std::size_t> sample_component_states(std::span<const std::size_t> component, std::size_t count,
                                                        std::uint64_t seed) {
  std::vector<std::size_t> pool(component.begin(), component.end());
  std::mt19937_64 rng(seed);
  const std::size_t take = std::min(count, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(take);
  return pool;
}

}  // namespace hsf
