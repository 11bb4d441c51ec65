#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <random>

#include "dfsq/optctrl.hpp"
#include "dfsq/spin.hpp"

namespace dfsq::testing {

inline Mat random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  return (a + a.adjoint()) / 2.0;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Midpoint product propagation in long double, each slice exponentiated by a
// scaled Taylor series. Serves as a finite-difference oracle whose rounding
// noise sits far below the double-precision gradient. Plain loops, since
// Eigen's generic long double kernels are several times slower here.
struct XMat {
  std::array<long double, 256> re{}, im{};

  static XMat identity() {
    XMat m;
    for (int i = 0; i < 16; ++i) m.re[static_cast<size_t>(17 * i)] = 1;
    return m;
  }
  // c * (a * b) + (add_identity ? 1 : 0)
  static XMat mul(const XMat& a, const XMat& b, long double c = 1, bool add_identity = false) {
    XMat out;
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        long double sr = 0, si = 0;
        for (int k = 0; k < 16; ++k) {
          const size_t ik = static_cast<size_t>(16 * i + k), kj = static_cast<size_t>(16 * k + j);
          sr += a.re[ik] * b.re[kj] - a.im[ik] * b.im[kj];
          si += a.re[ik] * b.im[kj] + a.im[ik] * b.re[kj];
        }
        const size_t ij = static_cast<size_t>(16 * i + j);
        out.re[ij] = c * sr + (add_identity && i == j ? 1 : 0);
        out.im[ij] = c * si;
      }
    return out;
  }
};

inline long double fidelity_extended(const PulseParams& p, int steps) {
  const auto& ops = control_operators().ops;
  const long double T = p.T, dt = T / steps, pi = std::acos(-1.0L);
  XMat U = XMat::identity();
  for (int j = 0; j < steps; ++j) {
    const long double t = (j + 0.5L) * dt;
    // A = -i dt H
    XMat A;
    for (int k = 0; k < kControls; ++k) {
      long double a = 0;
      for (int l = 1; l <= p.L(); ++l) a += static_cast<long double>(p.x(k, l - 1)) * std::sin(l * pi * t / T);
      for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) {
          const size_t rc = static_cast<size_t>(16 * r + c);
          A.re[rc] += dt * a * ops[static_cast<size_t>(k)](r, c).imag();
          A.im[rc] -= dt * a * ops[static_cast<size_t>(k)](r, c).real();
        }
    }
    long double norm = 0;
    for (int r = 0; r < 16; ++r) {
      long double row = 0;
      for (int c = 0; c < 16; ++c) row += std::hypot(A.re[static_cast<size_t>(16 * r + c)], A.im[static_cast<size_t>(16 * r + c)]);
      norm = std::max(norm, row);
    }
    int squarings = 0;
    long double shrink = 1;
    while (norm * shrink > 0.25L) {
      shrink /= 2;
      ++squarings;
    }
    for (size_t i = 0; i < 256; ++i) {
      A.re[i] *= shrink;
      A.im[i] *= shrink;
    }
    XMat E = XMat::identity();
    for (int n = 14; n >= 1; --n) E = XMat::mul(A, E, 1.0L / n, true);
    for (int q = 0; q < squarings; ++q) E = XMat::mul(E, E);
    U = XMat::mul(E, U);
  }
  const Mat& G = control_target();
  std::complex<long double> tr = 0;
  for (int i = 0; i < 16; ++i)
    for (int k = 0; k < 16; ++k) {
      const size_t ki = static_cast<size_t>(16 * k + i);
      tr += std::conj(std::complex<long double>(G(k, i))) * std::complex<long double>(U.re[ki], U.im[ki]);
    }
  return std::norm(tr / 16.0L);
}

}  // namespace dfsq::testing
