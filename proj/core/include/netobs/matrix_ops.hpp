#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace netobs {

// Relative accuracy of mat_exp against a reference power series, for inputs
// with ||A * t||_1 up to about 10.
inline constexpr double kMatExpRelTol = 1e-12;

// Absolute accuracy of the identity M * exp_integral(M, t) = mat_exp(M, t) - I.
inline constexpr double kExpIntegralIdentityTol = 1e-10;

// A square matrix kept exactly symmetric by construction. Inputs are
// symmetrized as (M + M^T) / 2; construction rejects matrices whose
// asymmetry exceeds `tol` (measured as max |M - M^T| entry) so accidental
// use on genuinely nonsymmetric data fails loudly.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const Eigen::MatrixXd& m, double tol = 1e-9);

  const Eigen::MatrixXd& mat() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  // Extreme eigenvalues via a selfadjoint solve.
  double min_eigenvalue() const;
  double max_eigenvalue() const;

 private:
  Eigen::MatrixXd m_;
};

// exp(M * t) by Pade-13 approximation with scaling and squaring
// (Higham, "The scaling and squaring method for the matrix exponential
// revisited", SIAM J. Matrix Anal. Appl. 26(4), 2005).
Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& m, double t);

// The integral of exp(M * tau) for tau from 0 to t, computed as the upper
// right block of exp([[M, I], [0, 0]] * t). This form needs no inverse of M
// and is exact for singular M. Requires t >= 0.
Eigen::MatrixXd exp_integral(const Eigen::MatrixXd& m, double t);

// Eigenvalues of a general square matrix, sorted by (real, imag) ascending.
std::vector<std::complex<double>> eig_spectrum(const Eigen::MatrixXd& m);

// True when every eigenvalue of s is below -margin. margin = 0 tests plain
// negative definiteness.
bool is_negative_definite(const SymmetricMatrix& s, double margin = 0.0);

// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& m);

// He(M) = M + M^T.
inline Eigen::MatrixXd he(const Eigen::MatrixXd& m) { return m + m.transpose(); }

}  // namespace netobs
