#include "netobs/matrix_ops.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "netobs/errors.hpp"

namespace netobs {

namespace {

void require_square(const Eigen::MatrixXd& m, const char* who) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(who) + ": matrix must be square, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

double l1_norm(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

// Pade-13 rational approximant of exp(A), valid for ||A||_1 <= theta_13.
Eigen::MatrixXd pade13(const Eigen::MatrixXd& a) {
  static const double b[14] = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a2 * a4;
  const Eigen::MatrixXd u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
           b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Eigen::MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
                            b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(const Eigen::MatrixXd& m, double tol) {
  require_square(m, "SymmetricMatrix");
  const double skew = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(skew <= tol)) {
    throw DomainError("SymmetricMatrix: input asymmetry " + std::to_string(skew) +
                      " exceeds tolerance " + std::to_string(tol));
  }
  m_ = 0.5 * (m + m.transpose());
}

double SymmetricMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double SymmetricMatrix::max_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& m, double t) {
  require_square(m, "mat_exp");
  if (!std::isfinite(t)) throw DomainError("mat_exp: t must be finite");
  if (m.rows() == 0) return Eigen::MatrixXd(0, 0);

  Eigen::MatrixXd a = m * t;
  if (!a.allFinite()) throw DomainError("mat_exp: input has non-finite entries");

  // theta_13 from Higham 2005, Table 2.3: below this 1-norm the Pade-13
  // approximant alone meets double precision backward error.
  constexpr double kTheta13 = 5.371920351148152;
  const double norm = l1_norm(a);
  if (norm == 0.0) return Eigen::MatrixXd::Identity(m.rows(), m.cols());
  int squarings = 0;
  if (norm > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
    a *= std::ldexp(1.0, -squarings);
  }
  Eigen::MatrixXd r = pade13(a);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

Eigen::MatrixXd exp_integral(const Eigen::MatrixXd& m, double t) {
  require_square(m, "exp_integral");
  if (!(t >= 0.0)) throw DomainError("exp_integral: t must be nonnegative");
  const Eigen::Index n = m.rows();
  if (n == 0) return Eigen::MatrixXd(0, 0);

  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = m;
  block.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  return mat_exp(block, t).topRightCorner(n, n);
}

std::vector<std::complex<double>> eig_spectrum(const Eigen::MatrixXd& m) {
  require_square(m, "eig_spectrum");
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eig_spectrum: QR iteration did not converge");
  }
  std::vector<std::complex<double>> out(es.eigenvalues().data(),
                                        es.eigenvalues().data() + m.rows());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

bool is_negative_definite(const SymmetricMatrix& s, double margin) {
  return s.max_eigenvalue() < -margin;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

}  // namespace netobs
