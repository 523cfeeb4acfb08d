#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fapre/fapre.hpp"
#include "test_util.hpp"

namespace fapre {
namespace {

using testing::random_matrix;
using testing::random_precoder;

// 64-node Gauss-Hermite values for a scalar channel with h g = 1, computed
// with numpy.polynomial.hermite.hermgauss before the implementation existed.
constexpr double kBpskMiAtUnitGain = 0.7214515946187628;
constexpr double kBpskMmseAtUnitGain = 0.23101792967217039;
constexpr double kQpskMiAtUnitGain = 0.9718883082739714;

ChannelMatrix scalar_channel(Complex h) {
  ComplexMatrix a(1, 1);
  a(0, 0) = h;
  return ChannelMatrix(a);
}

Precoder scalar_precoder(Complex g) {
  ComplexMatrix a(1, 1);
  a(0, 0) = g;
  return Precoder(a);
}

// Scalar MMSE by the same tensor Gauss-Hermite rule; test-only oracle.
double mmse_scalar_quadrature(Complex a, const Constellation& s, std::size_t nodes) {
  const GaussHermite rule = gauss_hermite(nodes);
  double total = 0.0;
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j) {
      const Complex n(rule.nodes[i], rule.nodes[j]);
      const double w = rule.weights[i] * rule.weights[j] / std::numbers::pi;
      for (const Complex& xm : s.points) {
        std::vector<double> t;
        double peak = -1e300;
        for (const Complex& xk : s.points) {
          t.push_back(std::norm(n) - std::norm(a * (xm - xk) + n));
          peak = std::max(peak, t.back());
        }
        double z = 0.0;
        Complex xhat(0.0, 0.0);
        for (std::size_t k = 0; k < s.size(); ++k) {
          const double p = std::exp(t[k] - peak);
          z += p;
          xhat += p * s.points[k];
        }
        total += w * std::norm(xm - xhat / z) / static_cast<double>(s.size());
      }
    }
  return total;
}

TEST(GaussHermite, IntegratesPolynomialsExactly) {
  const GaussHermite rule = gauss_hermite(16);
  double w0 = 0.0, w2 = 0.0, w4 = 0.0;
  for (std::size_t i = 0; i < 16; ++i) {
    const double x = rule.nodes[i];
    w0 += rule.weights[i];
    w2 += rule.weights[i] * x * x;
    w4 += rule.weights[i] * x * x * x * x;
  }
  const double sp = std::sqrt(std::numbers::pi);
  EXPECT_NEAR(w0, sp, 1e-14);
  EXPECT_NEAR(w2, sp / 2.0, 1e-14);
  EXPECT_NEAR(w4, 3.0 * sp / 4.0, 1e-13);
}

TEST(ScalarQuadrature, GoldenValues) {
  const Constellation bpsk = make_constellation("bpsk");
  EXPECT_NEAR(mi_scalar_quadrature(1.0, 1.0, bpsk, 64), kBpskMiAtUnitGain, 1e-12);
  EXPECT_NEAR(mi_scalar_quadrature(1.0, 1.0, make_constellation("qpsk"), 64), kQpskMiAtUnitGain, 1e-12);
  EXPECT_NEAR(mmse_scalar_quadrature(1.0, bpsk, 64), kBpskMmseAtUnitGain, 1e-12);
}

TEST(ScalarQuadrature, ZeroGainAndSaturation) {
  const Constellation bpsk = make_constellation("bpsk");
  EXPECT_EQ(mi_scalar_quadrature(1.0, 0.0, bpsk, 32), 0.0);
  EXPECT_NEAR(mi_scalar_quadrature(100.0, 1.0, bpsk, 64), 1.0, 1e-6);
  EXPECT_NEAR(mi_scalar_quadrature(Complex(0.0, 100.0), 1.0, make_constellation("qpsk"), 64), 2.0, 1e-6);
  EXPECT_THROW(mi_scalar_quadrature(1.0, 1.0, bpsk, 4), Error);
}

TEST(ScalarQuadrature, SelfConvergence) {
  const Constellation bpsk = make_constellation("bpsk");
  const double q32 = mi_scalar_quadrature(1.0, 1.0, bpsk, 32);
  const double q64 = mi_scalar_quadrature(1.0, 1.0, bpsk, 64);
  const double q128 = mi_scalar_quadrature(1.0, 1.0, bpsk, 128);
  // Measured: |q32 - q64| = 5.3e-7 and |q64 - q128| = 3.8e-9.
  EXPECT_LE(std::abs(q32 - q64), 1e-6);
  EXPECT_LE(std::abs(q64 - q128), 1e-8);
}

TEST(FiniteAlphabetMi, ZeroPrecoderIsExactlyZero) {
  Rng rng(1);
  for (const char* mod : {"bpsk", "qpsk", "qam16"}) {
    NoiseSampler sampler(3);
    const MiEstimate mi = mi_finite_alphabet(ChannelMatrix(random_matrix(rng, 2, 2)),
                                             Precoder(ComplexMatrix::Zero(2, 2)),
                                             make_constellation(mod), 50, sampler);
    EXPECT_EQ(mi.bits, 0.0) << mod;
    EXPECT_EQ(mi.std_error, 0.0) << mod;
  }
}

TEST(FiniteAlphabetMi, SaturatesAtHighSnr) {
  NoiseSampler sampler(4);
  const MiEstimate mi = mi_finite_alphabet(ChannelMatrix(100.0 * ComplexMatrix::Identity(2, 2)),
                                           identity_precoder(2), make_constellation("bpsk"), 500,
                                           sampler);
  EXPECT_NEAR(mi.bits, 2.0, 1e-3);
}

TEST(FiniteAlphabetMi, ScalarMatchesQuadratureOracle) {
  NoiseSampler sampler(99);
  const MiEstimate mi = mi_finite_alphabet(scalar_channel(1.0), scalar_precoder(1.0),
                                           make_constellation("bpsk"), 500, sampler);
  EXPECT_EQ(mi.noise_samples, 500u);
  EXPECT_GT(mi.std_error, 0.0);
  EXPECT_LE(std::abs(mi.bits - kBpskMiAtUnitGain), 3.0 * mi.std_error);
}

TEST(FiniteAlphabetMi, Errors) {
  NoiseSampler sampler(1);
  const ChannelMatrix h(ComplexMatrix::Identity(5, 5));
  try {
    mi_finite_alphabet(h, identity_precoder(5), make_constellation("qam16"), 10, sampler);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AlphabetTooLarge);
  }
  try {
    mi_finite_alphabet(ChannelMatrix(ComplexMatrix::Identity(2, 2)), identity_precoder(2),
                       make_constellation("bpsk"), 0, sampler);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroSampleCount);
  }
  EXPECT_THROW(mi_finite_alphabet(h, identity_precoder(2), make_constellation("bpsk"), 10, sampler),
               Error);
}

TEST(FiniteAlphabetMi, BoundedOnRandomInstances) {
  Rng rng(17);
  const char* mods[] = {"bpsk", "qpsk"};
  for (int i = 0; i < 1000; ++i) {
    const Constellation s = make_constellation(mods[i % 2]);
    const auto m = static_cast<Eigen::Index>(1 + rng.index(2));
    const auto n = static_cast<Eigen::Index>(1 + rng.index(3));
    const ChannelMatrix h(random_matrix(rng, n, m) * std::exp(rng.uniform(-3.0, 3.0)));
    NoiseSampler sampler(static_cast<std::uint64_t>(i));
    const MiEstimate mi = mi_finite_alphabet(h, random_precoder(rng, m), s, 50, sampler);
    const double cap = static_cast<double>(m) * std::log2(static_cast<double>(s.size()));
    ASSERT_GE(mi.bits, 0.0);
    ASSERT_LE(mi.bits, cap + 3.0 * mi.std_error);
  }
}

TEST(FiniteAlphabetMi, SeedDeterminism) {
  Rng rng(3);
  const ChannelMatrix h(random_matrix(rng, 2, 2));
  const Precoder g = random_precoder(rng, 2);
  NoiseSampler a(123), b(123);
  const MiEstimate x = mi_finite_alphabet(h, g, make_constellation("qpsk"), 200, a);
  const MiEstimate y = mi_finite_alphabet(h, g, make_constellation("qpsk"), 200, b);
  EXPECT_EQ(x.bits, y.bits);
  EXPECT_EQ(x.std_error, y.std_error);
  EXPECT_EQ(a.position(), 400u);
}

TEST(NoiseSampler, MomentsAndChildren) {
  NoiseSampler s(42);
  const ComplexMatrix n = s.draw(2, 50000);
  EXPECT_NEAR(n.row(0).cwiseAbs2().mean(), 1.0, 0.02);
  EXPECT_NEAR(std::abs(n.row(0).mean()), 0.0, 0.02);
  EXPECT_NEAR(std::abs((n.row(0).array() * n.row(1).conjugate().array()).mean()), 0.0, 0.02);
  EXPECT_NEAR((n.row(0).array().square()).mean().real(), 0.0, 0.02);  // circular
  NoiseSampler c1 = s.child(1), c1b = s.child(1), c2 = s.child(2);
  const ComplexMatrix a = c1.draw(1, 4);
  EXPECT_EQ(a, c1b.draw(1, 4));
  EXPECT_NE(a, c2.draw(1, 4));
}

TEST(MmseMatrix, ZeroPrecoderGivesIdentity) {
  NoiseSampler s1(1);
  const MmseMatrix e = mmse_matrix(ChannelMatrix(ComplexMatrix::Identity(2, 2)),
                                   Precoder(ComplexMatrix::Zero(2, 2)), make_constellation("bpsk"),
                                   7, s1);
  EXPECT_EQ(e.matrix, ComplexMatrix(ComplexMatrix::Identity(2, 2)));
  NoiseSampler s2(1);
  const MmseMatrix q = mmse_matrix(ChannelMatrix(ComplexMatrix::Identity(2, 2)),
                                   Precoder(ComplexMatrix::Zero(2, 2)), make_constellation("qpsk"),
                                   3, s2);
  EXPECT_LT((q.matrix - ComplexMatrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(MmseMatrix, VanishesAtHighSnr) {
  NoiseSampler s(2);
  const MmseMatrix e = mmse_matrix(ChannelMatrix(100.0 * ComplexMatrix::Identity(2, 2)),
                                   identity_precoder(2), make_constellation("bpsk"), 500, s);
  EXPECT_LE(e.matrix.norm(), 1e-3);
}

TEST(MmseMatrix, ScalarMatchesQuadratureOracle) {
  NoiseSampler s(8);
  const MmseMatrix e = mmse_matrix(scalar_channel(1.0), scalar_precoder(1.0),
                                   make_constellation("bpsk"), 500, s);
  EXPECT_GT(e.std_error, 0.0);
  EXPECT_LE(std::abs(e.matrix(0, 0).real() - kBpskMmseAtUnitGain), 3.0 * e.std_error);
}

TEST(MmseMatrix, HermitianWithEigenvaluesInUnitInterval) {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const ChannelMatrix h(random_matrix(rng, 2, 2) * std::exp(rng.uniform(-2.0, 2.0)));
    NoiseSampler s(static_cast<std::uint64_t>(i));
    const MmseMatrix e = mmse_matrix(h, random_precoder(rng, 2), make_constellation(i % 2 ? "qpsk" : "bpsk"),
                                     200, s);
    ASSERT_LE((e.matrix - e.matrix.adjoint()).norm(), 1e-9);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(e.matrix);
    const double eps = 3.0 * e.std_error;
    ASSERT_GE(eig.eigenvalues().minCoeff(), -3.0 * eps - 1e-12);
    ASSERT_LE(eig.eigenvalues().maxCoeff(), 1.0 + 3.0 * eps + 1e-12);
  }
}

TEST(MiGradient, ClosedForms) {
  MmseMatrix e{ComplexMatrix::Identity(2, 2), 0.0};
  Rng rng(4);
  const ChannelMatrix h(random_matrix(rng, 2, 2));
  EXPECT_EQ(mi_gradient(h, Precoder(ComplexMatrix::Zero(2, 2)), e).norm(), 0.0);

  MmseMatrix scalar{ComplexMatrix::Constant(1, 1, 0.37), 0.0};
  const ComplexMatrix d = mi_gradient(scalar_channel(1.0), scalar_precoder(1.0), scalar);
  EXPECT_EQ(d(0, 0), Complex(0.37, 0.0));
  EXPECT_THROW(mi_gradient(h, identity_precoder(3), e), Error);
}

// Directional derivative of MI (nats) along dG by central differences on a
// fixed noise block, against 2 Re tr(D^H dG).
TEST(MiGradient, MatchesFiniteDifferences) {
  Rng rng(2024);
  const Constellation bpsk = make_constellation("bpsk");
  for (int trial = 0; trial < 20; ++trial) {
    const ChannelMatrix h(random_matrix(rng, 2, 2) * rng.uniform(0.5, 1.5));
    const ComplexMatrix g = random_precoder(rng, 2).matrix() * std::sqrt(0.8);
    const ComplexMatrix dir = random_matrix(rng, 2, 2);
    Rng shift(static_cast<std::uint64_t>(trial) + 500);
    const ComplexMatrix noise = testing::lattice_noise(1000003, 76757, shift);
    const double step = 1e-4;
    const double up = mi_finite_alphabet(h, Precoder(g + step * dir), bpsk, noise).bits;
    const double down = mi_finite_alphabet(h, Precoder(g - step * dir), bpsk, noise).bits;
    const double fd = (up - down) / (2.0 * step) * std::numbers::ln2;
    const Precoder p(g);
    const double analytic =
        directional_derivative(mi_gradient(h, p, mmse_matrix(h, p, bpsk, noise)), dir);
    EXPECT_LE(testing::relative_error(analytic, fd), 1e-2) << "trial " << trial;
  }
}

}  // namespace
}  // namespace fapre
