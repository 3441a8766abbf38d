#include <gtest/gtest.h>

#include <set>

#include "hsf/model.hpp"

using namespace hsf;

namespace {

ModelParams params(int L, double J, double U, double g, double u = 0.0, double omega = 1.0) {
  ModelParams p = ModelParams::half_filling(L);
  p.J = J;
  p.U = U;
  p.g = g;
  p.u = u;
  p.omega = omega;
  return p;
}

// First-principles dense H0: compare every pair of basis strings.
DenseMatrix dense_h0(const ModelParams& p, const SectorBasis& b) {
  const auto n = static_cast<Eigen::Index>(b.size());
  DenseMatrix h = DenseMatrix::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto a = b.state(static_cast<std::size_t>(r)).to_string();
      const auto d = b.state(static_cast<std::size_t>(c)).to_string();
      if (r == c) {
        double e = 0;
        for (std::size_t j = 0; j < a.size(); ++j) {
          if (a[j] == '1') e -= p.g * static_cast<double>(j);
          if (j + 1 < a.size() && a[j] == '1' && a[j + 1] == '1') e += p.U;
        }
        h(r, c) = e;
        continue;
      }
      std::vector<std::size_t> diff;
      for (std::size_t j = 0; j < a.size(); ++j)
        if (a[j] != d[j]) diff.push_back(j);
      if (diff.size() == 2 && diff[1] == diff[0] + 1) h(r, c) = p.J;
    }
  return h;
}

double max_diff(const DenseMatrix& a, const DenseMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(BuildH0, TwoSiteSingleParticle) {
  ModelParams p;
  p.L = 2;
  p.N = 1;
  p.J = 0.3;
  p.g = 1.7;
  auto H = build_H0(p, SectorBasis(2, 1)).to_dense();
  // basis order: |10> (bits 1), |01> (bits 2)
  EXPECT_EQ(H(0, 0), complex(0.0));
  EXPECT_EQ(H(1, 1), complex(-1.7));
  EXPECT_EQ(H(0, 1), complex(0.3));
  EXPECT_EQ(H(1, 0), complex(0.3));
}

TEST(BuildH0, MatchesFirstPrinciplesDenseBuilder) {
  for (int L : {4, 6, 8}) {
    auto p = params(L, 0.8, 2.5, 1.5);
    SectorBasis b(L, L / 2);
    const auto H = build_H0(p, b);
    EXPECT_TRUE(H.hermitian());
    EXPECT_LT(H.hermiticity_residual(), 1e-15);
    EXPECT_LT(max_diff(H.to_dense(), dense_h0(p, b)), 1e-14);
  }
  auto p = params(6, 1.0, 3.0, 2.0);
  SectorBasis b(6, 3);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> e1(build_H0(p, b).to_dense()), e2(dense_h0(p, b));
  EXPECT_LT((e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildH0, DiagonalMatchesStarkEnergy) {
  auto p = params(4, 1.0, 50.0, 50.0);
  SectorBasis b(4, 2);
  const auto H = build_H0(p, b);
  EXPECT_EQ(H.at(b.index(FockState::from_string("0101")), b.index(FockState::from_string("0101"))),
            complex(-200.0));
  EXPECT_DOUBLE_EQ(stark_energy(FockState::from_string("1100"), 50, 50), 0.0);
  EXPECT_DOUBLE_EQ(stark_energy(FockState::from_string("1111111010000000"), 2.0, 3.0), 6 * 2.0 - 29 * 3.0);
  EXPECT_THROW(build_H0(params(6, 1, 1, 1), b), ParameterError);
}

TEST(Channels, PartitionEveryHopExhaustively) {
  for (int L = 2; L <= 8; ++L) {
    SectorBasis b(L, L / 2);
    for (std::size_t i = 0; i < b.size(); ++i)
      for (int j = 0; j + 1 < L; ++j) {
        const auto s = b.state(i);
        if (s.occupation(j) == s.occupation(j + 1)) continue;
        const int sum = projector_value(HoppingChannel::P0, s, j) + projector_value(HoppingChannel::Pg, s, j) +
                        projector_value(HoppingChannel::P2g, s, j);
        EXPECT_EQ(sum, 1);
      }
  }
}

TEST(Channels, SumRuleEqualsBareHopping) {
  for (int L : {6, 8}) {
    SectorBasis b(L, L / 2);
    auto sum = add_scaled(add_scaled(build_channel(HoppingChannel::P0, b), build_channel(HoppingChannel::Pg, b), 1, 1),
                          build_channel(HoppingChannel::P2g, b), 1, 1);
    EXPECT_EQ(max_diff(sum.to_dense(), build_hopping(b).to_dense()), 0.0);
  }
}

TEST(Channels, BoundaryAndExplicitConfigurations) {
  SectorBasis b(4, 2);
  const auto P0 = build_channel(HoppingChannel::P0, b);
  const auto Pg = build_channel(HoppingChannel::Pg, b);
  const auto P2g = build_channel(HoppingChannel::P2g, b);
  auto idx = [&](const char* s) { return b.index(FockState::from_string(s)); };
  // j = 0 with n_2 = 1: 1010 <-> 0110 is a P0 move; absent n_2 it is not.
  EXPECT_EQ(P0.at(idx("0110"), idx("1010")), complex(1.0));
  EXPECT_EQ(P0.at(idx("0101"), idx("1001")), complex(0.0));
  EXPECT_EQ(Pg.at(idx("0101"), idx("1001")), complex(1.0));
  // 1100 <-> 1010 moves the particle on site 1 with n_0 = 1, n_3 = 0.
  EXPECT_EQ(P2g.at(idx("1010"), idx("1100")), complex(1.0));
  EXPECT_EQ(P0.at(idx("1010"), idx("1100")), complex(0.0));
  EXPECT_EQ(Pg.at(idx("1010"), idx("1100")), complex(0.0));
}

TEST(Channels, ReflectionMapsP0OntoP2g) {
  for (int L = 4; L <= 10; L += 2) {
    SectorBasis b(L, L / 2);
    const auto P0 = build_channel(HoppingChannel::P0, b);
    const auto P2g = build_channel(HoppingChannel::P2g, b);
    std::vector<std::size_t> r(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) r[i] = b.index(reflect(b.state(i)));
    for (auto e : P0.triplets()) EXPECT_EQ(P2g.at(r[e.row], r[e.col]), e.value);
    EXPECT_EQ(P0.nonzeros(), P2g.nonzeros());
  }
}

TEST(Effective, U0ConservesChargeAndFreezesStates) {
  for (int L : {6, 8, 10}) {
    SectorBasis b(L, L / 2);
    const auto H = build_effective(EffectiveKind::U0, params(L, 1.0, 50, 50), b);
    for (auto e : H.triplets()) EXPECT_EQ(charge_E(b.state(e.row)), charge_E(b.state(e.col)));
  }
  SectorBasis b(16, 8);
  const auto H = build_effective(EffectiveKind::U0, params(16, 1.0, 50, 50), b);
  const auto row = b.index(FockState::from_string("1111111010000000"));
  EXPECT_EQ(H.row_ptr()[row + 1] - H.row_ptr()[row], 0u);
}

TEST(Effective, Omega1WithoutDriveEqualsU0) {
  SectorBasis b(8, 4);
  auto p = params(8, 1.0, 20, 20, 0.0, 20);
  EXPECT_EQ(max_diff(build_effective(EffectiveKind::Omega1, p, b).to_dense(),
                     build_effective(EffectiveKind::U0, p, b).to_dense()),
            0.0);
}

TEST(Effective, Omega2ConservesParityAndLinksCdwCells) {
  for (int L : {6, 8, 10}) {
    SectorBasis b(L, L / 2);
    const auto H = build_effective(EffectiveKind::Omega2, params(L, 1.0, 50, 50, 1.0, 100), b);
    EXPECT_GT(H.nonzeros(), 0u);
    for (auto e : H.triplets()) EXPECT_EQ(parity_E(b.state(e.row)), parity_E(b.state(e.col)));
  }
  SectorBasis b(4, 2);
  const auto H = build_effective(EffectiveKind::Omega2, params(4, 1.0, 50, 50, 1.0, 100), b);
  auto idx = [&](const char* s) { return b.index(FockState::from_string(s)); };
  EXPECT_NE(H.at(idx("0110"), idx("0101")), complex(0.0));
  EXPECT_NE(H.at(idx("0110"), idx("1010")), complex(0.0));
}

TEST(Effective, Omega2FullIsHermitianWithParityDiagonal) {
  SectorBasis b(8, 4);
  auto p = params(8, 1.0, 50, 50, 1.0, 100);
  const auto H = build_effective(EffectiveKind::Omega2Full, p, b);
  EXPECT_LT(H.hermiticity_residual(), 1e-15);
  for (std::size_t i = 0; i < b.size(); ++i)
    EXPECT_EQ(H.at(i, i), complex(parity_E(b.state(i)) == 1 ? 0.0 : 50.0));
  EXPECT_THROW(build_effective(EffectiveKind::Omega2Full, params(8, 1.0, 40, 50, 1.0, 100), b), ParameterError);
  EXPECT_NO_THROW(build_effective(EffectiveKind::U0, params(8, 1.0, 40, 50, 1.0, 100), b));
}

TEST(Tags, RoundTrip) {
  for (auto k : {EffectiveKind::Static, EffectiveKind::U0, EffectiveKind::Omega1, EffectiveKind::Omega2Full,
                 EffectiveKind::Omega2, EffectiveKind::HF1_Ug, EffectiveKind::HF1_general})
    EXPECT_EQ(kind_from_tag(to_tag(k)), k);
  EXPECT_EQ(to_tag(EffectiveKind::U0), "eff-u0");
  EXPECT_THROW(kind_from_tag("bogus"), ParameterError);
}

TEST(HF1, ResonantCoefficients) {
  const double g = 20.0;
  auto c1 = hf1_coefficients_u_equals_g(params(6, 1.0, g, g, 0.7, g));
  EXPECT_NEAR(std::abs(c1.pg - 0.35), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(c1.p2g), 0.0, 1e-12);
  auto c2 = hf1_coefficients_u_equals_g(params(6, 1.0, g, g, 0.7, 2 * g));
  EXPECT_NEAR(std::abs(c2.p2g - 0.35), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(c2.pg - complex(0.0, -2.0 * (3.0 - 0.7) / (3.0 * M_PI))), 0.0, 1e-12);
  auto ch = hf1_coefficients_u_equals_g(params(6, 1.0, g, g, 0.7, g / 2));
  EXPECT_NEAR(std::abs(ch.pg), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(ch.p2g), 0.0, 1e-12);
}

TEST(HF1, SubharmonicDriveRecoversU0PlusDiagonal) {
  SectorBasis b(8, 4);
  for (int q : {2, 3, 4}) {
    const double g = 12.0;
    auto p = params(8, 1.0, g, g, 1.0, g / q);
    auto hf = build_HF1(p, b, false).to_dense();
    DenseMatrix ref = build_effective(EffectiveKind::U0, p, b).to_dense();
    for (std::size_t i = 0; i < b.size(); ++i)
      ref(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
          fold_quasienergy(stark_energy(b.state(i), g, g), p.omega);
    EXPECT_LT(max_diff(hf, ref), 1e-12) << "q=" << q;
  }
}

TEST(HF1, ResonantFormsMatchEffectiveHamiltonians) {
  SectorBasis b(8, 4);
  const double g = 10.0;
  auto p1 = params(8, 1.0, g, g, 1.0, g);
  DenseMatrix d1 = build_HF1(p1, b, false).to_dense() - build_effective(EffectiveKind::Omega1, p1, b).to_dense();
  d1.diagonal().setZero();
  EXPECT_LT(d1.cwiseAbs().maxCoeff(), 1e-12);
  for (std::size_t i = 0; i < b.size(); ++i)
    EXPECT_NEAR(build_HF1(p1, b, false).at(i, i).real(), 0.0, 1e-12);
  auto p2 = params(8, 1.0, g, g, 1.0, 2 * g);
  EXPECT_LT(max_diff(build_HF1(p2, b, false).to_dense(), build_effective(EffectiveKind::Omega2Full, p2, b).to_dense()),
            1e-12);
}

TEST(HF1, GeneralFormReducesToEqualCouplingForm) {
  SectorBasis b(6, 3);
  for (double w : {7.3, 10.0, 20.0, 5.0}) {
    auto p = params(6, 1.0, 10.0, 10.0, 0.8, w);
    EXPECT_LT(max_diff(build_HF1(p, b, true).to_dense(), build_HF1(p, b, false).to_dense()), 1e-12) << w;
  }
  auto p = params(6, 1.0, 4.0, 10.0, 0.8, 7.3);
  EXPECT_THROW(build_HF1(p, b, false), ParameterError);
  auto h = build_HF1(p, b, true);
  EXPECT_TRUE(h.hermitian());
}

TEST(HF1, HermitianAtGenericFrequency) {
  SectorBasis b(8, 4);
  auto h = build_HF1(params(8, 1.0, 10, 10, 1.0, 7.3), b, false);
  EXPECT_LT(h.hermiticity_residual(), 1e-12);
}

TEST(Folding, SymmetricZone) {
  EXPECT_DOUBLE_EQ(fold_quasienergy(0.5, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(fold_quasienergy(-0.5, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(fold_quasienergy(3.2, 2.0), -0.8);
  for (double e = -40; e < 40; e += 0.37) {
    const double f = fold_quasienergy(e, 3.0);
    EXPECT_GT(f, -1.5);
    EXPECT_LE(f, 1.5 + 1e-12);
    const double k = (e - f) / 3.0;
    EXPECT_NEAR(k, std::round(k), 1e-9);
  }
}

TEST(Resonance, NearResonanceWarns) {
  std::vector<std::string> seen;
  auto prev = set_warning_handler([&](const std::string& m) { seen.push_back(m); });
  (void)hf1_coefficients_u_equals_g(params(6, 1.0, 10.0, 10.0, 1.0, 10.0 * (1 + 1e-7)));
  EXPECT_FALSE(seen.empty());
  seen.clear();
  (void)hf1_coefficients_u_equals_g(params(6, 1.0, 10.0, 10.0, 1.0, 10.0));
  EXPECT_TRUE(seen.empty());
  set_warning_handler(prev);
}
