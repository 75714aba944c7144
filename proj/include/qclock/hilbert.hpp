#pragma once

// Dense complex linear algebra substrate shared by all physics modules.
// Matrices are Eigen::MatrixXcd with row-major *semantic* indexing for
// composite systems: the tensor index convention is (i_a * rows_b + i_b),
// so the first factor is the most significant one. All fixtures depend
// on this convention.

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qclock {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

namespace tol {
// Defaults for algebraic identities on double-precision spectral methods
// at global dimension <= ~1536. Override per call where a function takes
// a tolerance argument.
inline constexpr double hermitian = 1e-12;
inline constexpr double trace = 1e-12;
inline constexpr double psd = 1e-10;
inline constexpr double algebraic = 1e-10;
}  // namespace tol

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

inline bool all_finite(const StateVector& v) {
  return v.allFinite();
}

/// max |M - M^dagger| over entries; 0 for exactly Hermitian input.
inline double hermiticity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("hermiticity_defect: matrix must be square");
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const ComplexMatrix& m, double tolerance = tol::hermitian) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return hermiticity_defect(m) <= tolerance * scale;
}

inline bool is_normalized(const StateVector& v, double tolerance = tol::trace) {
  return std::abs(v.norm() - 1.0) <= tolerance;
}

struct DensityTolerances {
  double hermitian = tol::hermitian;
  double trace = tol::trace;
  double psd = tol::psd;
};

/// Validated density operator: Hermitian, unit trace, positive semidefinite
/// within construction tolerances. Immutable after construction.
class DensityOperator {
 public:
  explicit DensityOperator(ComplexMatrix m, const DensityTolerances& t = {}) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("DensityOperator: matrix must be square");
    if (!all_finite(m_)) throw std::invalid_argument("DensityOperator: non-finite entries");
    if (hermiticity_defect(m_) > t.hermitian)
      throw std::invalid_argument("DensityOperator: not Hermitian within tolerance");
    if (std::abs(m_.trace() - Complex(1.0, 0.0)) > t.trace)
      throw std::invalid_argument("DensityOperator: trace differs from 1");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m_, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("DensityOperator: eigenvalue check failed");
    if (es.eigenvalues().minCoeff() < -t.psd)
      throw std::invalid_argument("DensityOperator: negative eigenvalue beyond tolerance");
  }

  static DensityOperator pure(const StateVector& psi) {
    const double n = psi.norm();
    if (n == 0.0) throw std::invalid_argument("DensityOperator::pure: zero vector");
    StateVector u = psi / n;
    return DensityOperator(u * u.adjoint());
  }

  const ComplexMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  ComplexMatrix m_;
};

/// Kronecker product with index convention (i_a * rows_b + i_b).
inline ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline StateVector tensor_product(const StateVector& a, const StateVector& b) {
  StateVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// Partial trace of a square matrix factored as dims[0] x dims[1] x ... with
/// the row-major composite index convention. `keep` lists the factor indices
/// that survive, in their original order.
inline ComplexMatrix partial_trace_matrix(const ComplexMatrix& rho,
                                          const std::vector<Eigen::Index>& dims,
                                          const std::vector<std::size_t>& keep) {
  Eigen::Index total = 1;
  for (auto d : dims) {
    if (d <= 0) throw std::invalid_argument("partial_trace: factor dimensions must be positive");
    total *= d;
  }
  if (rho.rows() != total || rho.cols() != total)
    throw std::invalid_argument("partial_trace: product of dims does not match matrix dimension");

  std::vector<std::size_t> kp = keep;
  std::sort(kp.begin(), kp.end());
  kp.erase(std::unique(kp.begin(), kp.end()), kp.end());
  for (auto k : kp)
    if (k >= dims.size()) throw std::invalid_argument("partial_trace: keep index out of range");

  std::vector<std::size_t> tr;
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (std::find(kp.begin(), kp.end(), i) == kp.end()) tr.push_back(i);

  std::vector<Eigen::Index> stride(dims.size());
  stride.back() = 1;
  for (std::size_t i = dims.size() - 1; i > 0; --i) stride[i - 1] = stride[i] * dims[i];

  auto enumerate_offsets = [&](const std::vector<std::size_t>& factors) {
    Eigen::Index count = 1;
    for (auto f : factors) count *= dims[f];
    std::vector<Eigen::Index> off(static_cast<std::size_t>(count), 0);
    for (Eigen::Index idx = 0; idx < count; ++idx) {
      Eigen::Index rem = idx;
      Eigen::Index o = 0;
      for (std::size_t level = factors.size(); level > 0; --level) {
        const std::size_t f = factors[level - 1];
        o += (rem % dims[f]) * stride[f];
        rem /= dims[f];
      }
      off[static_cast<std::size_t>(idx)] = o;
    }
    return off;
  };

  const auto koff = enumerate_offsets(kp);
  const auto toff = enumerate_offsets(tr);
  const auto dk = static_cast<Eigen::Index>(koff.size());

  ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
  for (Eigen::Index a = 0; a < dk; ++a)
    for (Eigen::Index b = 0; b < dk; ++b) {
      Complex s(0.0, 0.0);
      for (auto e : toff) s += rho(koff[a] + e, koff[b] + e);
      out(a, b) = s;
    }
  return out;
}

inline DensityOperator partial_trace(const DensityOperator& rho, const std::vector<Eigen::Index>& dims,
                                     const std::vector<std::size_t>& keep,
                                     const DensityTolerances& t = {}) {
  return DensityOperator(partial_trace_matrix(rho.matrix(), dims, keep), t);
}

struct HermitianEigensystem {
  Eigen::VectorXd values;  // ascending
  ComplexMatrix vectors;   // columns
};

inline HermitianEigensystem hermitian_eigensystem(const ComplexMatrix& h,
                                                  double tolerance = tol::hermitian) {
  if (!is_hermitian(h, tolerance))
    throw std::invalid_argument("hermitian_eigensystem: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("hermitian_eigensystem: solver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// U = exp(-i H t) via spectral decomposition of Hermitian H.
inline ComplexMatrix hermitian_exponential(const ComplexMatrix& h, double t) {
  const auto es = hermitian_eigensystem(h);
  StateVector phases(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    phases(i) = std::polar(1.0, -es.values(i) * t);
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

inline Complex expectation(const ComplexMatrix& op, const DensityOperator& rho) {
  if (op.rows() != rho.dim() || op.cols() != rho.dim())
    throw std::invalid_argument("expectation: dimension mismatch");
  return (op * rho.matrix()).trace();
}

inline Complex expectation(const ComplexMatrix& op, const StateVector& psi) {
  if (op.rows() != psi.size() || op.cols() != psi.size())
    throw std::invalid_argument("expectation: dimension mismatch");
  return psi.dot(op * psi);  // Eigen's dot conjugates the left argument
}

inline ComplexMatrix projector(const StateVector& psi) {
  return psi * psi.adjoint();
}

}  // namespace qclock
