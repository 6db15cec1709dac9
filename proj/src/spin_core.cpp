#include "exspin/spin_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "exspin/constants.hpp"
#include "exspin/error.hpp"

namespace exspin {

namespace {

constexpr double kHermitianTol = 1e-12;

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

SpinSite::SpinSite(SpinValue s, double g, std::string name)
    : spin(s), g_factor(g), label(std::move(name)) {
  if (!(g > 0.0)) throw std::invalid_argument("g-factor must be positive");
}

SpinSystem::SpinSystem(std::vector<SpinSite> sites) : sites_(std::move(sites)) {
  if (sites_.empty()) throw std::invalid_argument("spin system needs at least one site");
  for (const auto& s : sites_) dim_ *= s.spin.multiplicity();
}

SpinSystem SpinSystem::triplet_and_copper(double g_triplet, double g_cu) {
  return SpinSystem({SpinSite(SpinValue::one(), g_triplet, "triplet"),
                     SpinSite(SpinValue::half(), g_cu, "cu")});
}

std::size_t SpinSystem::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < sites_.size(); ++i)
    if (sites_[i].label == label) return i;
  throw std::invalid_argument("no site labelled '" + label + "'");
}

Eigen::Index SpinSystem::basis_index(std::span<const int> twice_m) const {
  if (twice_m.size() != sites_.size())
    throw std::invalid_argument("basis_index: need one m value per site");
  Eigen::Index idx = 0;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const int tw = sites_[i].spin.twice_spin();
    const int tm = twice_m[i];
    if (std::abs(tm) > tw || (tw - tm) % 2 != 0)
      throw std::invalid_argument("basis_index: m out of range for site " + std::to_string(i));
    idx = idx * sites_[i].spin.multiplicity() + (tw - tm) / 2;
  }
  return idx;
}

// ---------------------------------------------------------------------------

Operator::Operator(Matrix m, bool hermitian) : m_(std::move(m)), hermitian_(hermitian) {
  if (m_.rows() != m_.cols()) throw std::invalid_argument("operator must be square");
  if (hermitian_ && hermiticity_residual() > kHermitianTol)
    throw std::invalid_argument("operator flagged Hermitian is not Hermitian");
}

Operator Operator::zero(Eigen::Index dim) { return Operator(Matrix::Zero(dim, dim), true); }
Operator Operator::identity(Eigen::Index dim) { return Operator(Matrix::Identity(dim, dim), true); }

double Operator::hermiticity_residual() const {
  const double scale = max_abs(m_);
  if (scale == 0.0) return 0.0;
  return max_abs(m_ - m_.adjoint()) / scale;
}

Operator Operator::adjoint() const { return Operator(m_.adjoint(), hermitian_); }

Operator operator+(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("operator dimension mismatch");
  return Operator(a.m_ + b.m_, a.hermitian_ && b.hermitian_);
}

Operator operator-(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("operator dimension mismatch");
  return Operator(a.m_ - b.m_, a.hermitian_ && b.hermitian_);
}

Operator operator*(double s, const Operator& a) { return Operator(s * a.m_, a.hermitian_); }

Operator operator*(cplx s, const Operator& a) {
  return Operator(s * a.m_, a.hermitian_ && s.imag() == 0.0);
}

Operator operator*(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("operator dimension mismatch");
  return Operator(a.m_ * b.m_, false);
}

// ---------------------------------------------------------------------------

StateVector::StateVector(Vector v) : v_(std::move(v)) {
  if (std::abs(v_.norm() - 1.0) > 1e-10) throw std::invalid_argument("state vector is not normalized");
}

StateVector StateVector::basis(Eigen::Index dim, Eigen::Index k) {
  if (k < 0 || k >= dim) throw std::invalid_argument("basis index out of range");
  Vector v = Vector::Zero(dim);
  v(k) = 1.0;
  return StateVector(std::move(v));
}

StateVector StateVector::product(const SpinSystem& system, std::span<const int> twice_m) {
  return basis(system.dimension(), system.basis_index(twice_m));
}

DensityMatrix::DensityMatrix(Matrix rho) : rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols()) throw std::invalid_argument("density matrix must be square");
  if (max_abs(rho_ - rho_.adjoint()) > 1e-10) throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(rho_.trace().real() - 1.0) > 1e-8) throw std::invalid_argument("density matrix trace is not 1");
  if (min_eigenvalue() < -1e-8) throw std::invalid_argument("density matrix has a negative eigenvalue");
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  return DensityMatrix(psi.vector() * psi.vector().adjoint());
}

DensityMatrix DensityMatrix::unchecked(Matrix rho) { return DensityMatrix(std::move(rho), Unchecked{}); }

double DensityMatrix::min_eigenvalue() const {
  const Matrix herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------

SpinOperators spin_operators(SpinValue s) {
  const int d = s.multiplicity();
  const double sv = s.value();
  Matrix sz = Matrix::Zero(d, d);
  Matrix sp = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = sv - k;
    sz(k, k) = m;
    // <m+1|S+|m> sits one row above the column of m.
    if (k > 0) sp(k - 1, k) = std::sqrt(sv * (sv + 1.0) - m * (m + 1.0));
  }
  const Matrix sm = sp.adjoint();
  const cplx i2(0.0, 2.0);
  return {Operator((sp + sm) / 2.0, true), Operator((sp - sm) / i2, true), Operator(sz, true),
          Operator(sp), Operator(sm)};
}

Operator embed(const Operator& op, std::size_t site_index, const SpinSystem& system) {
  if (site_index >= system.size()) throw std::invalid_argument("embed: site index out of range");
  if (op.dim() != system.site(site_index).spin.multiplicity())
    throw std::invalid_argument("embed: operator dimension does not match site multiplicity");
  Matrix out = Matrix::Identity(1, 1);
  for (std::size_t i = 0; i < system.size(); ++i) {
    const int d = system.site(i).spin.multiplicity();
    out = kron(out, i == site_index ? op.matrix() : Matrix::Identity(d, d));
  }
  return Operator(std::move(out), op.hermitian_hint());
}

Operator heisenberg(double j_mev, const SpinSystem& system, std::size_t a, std::size_t b) {
  if (a == b) throw std::invalid_argument("heisenberg: sites must differ");
  const auto sa = spin_operators(system.site(a).spin);
  const auto sb = spin_operators(system.site(b).spin);
  const Operator dot = embed(sa.sx, a, system) * embed(sb.sx, b, system) +
                       embed(sa.sy, a, system) * embed(sb.sy, b, system) +
                       embed(sa.sz, a, system) * embed(sb.sz, b, system);
  Matrix h = j_mev * dot.matrix();
  // S_a . S_b is Hermitian analytically; remove rounding asymmetry.
  h = 0.5 * (h + h.adjoint()).eval();
  return Operator(std::move(h), true);
}

Operator zeeman(double b_tesla, const SpinSystem& system) {
  return zeeman(b_tesla, SiteOperatorSet::from_system(system));
}

Operator total_spin_squared(const SpinSystem& system) {
  const Eigen::Index dim = system.dimension();
  Matrix tx = Matrix::Zero(dim, dim), ty = tx, tz = tx;
  for (std::size_t i = 0; i < system.size(); ++i) {
    const auto s = spin_operators(system.site(i).spin);
    tx += embed(s.sx, i, system).matrix();
    ty += embed(s.sy, i, system).matrix();
    tz += embed(s.sz, i, system).matrix();
  }
  Matrix s2 = tx * tx + ty * ty + tz * tz;
  s2 = 0.5 * (s2 + s2.adjoint()).eval();
  return Operator(std::move(s2), true);
}

double total_spin_squared_expectation(const StateVector& state, const SpinSystem& system) {
  if (state.dim() != system.dimension()) throw std::invalid_argument("state dimension does not match system");
  return expectation(total_spin_squared(system), state);
}

double total_spin_squared_expectation(const DensityMatrix& state, const SpinSystem& system) {
  if (state.dim() != system.dimension()) throw std::invalid_argument("state dimension does not match system");
  return expectation(total_spin_squared(system), state);
}

Eigensystem eigensystem(const Operator& op) {
  if (op.hermiticity_residual() > kHermitianTol)
    throw std::invalid_argument("eigensystem: operator is not Hermitian");
  const Matrix herm = 0.5 * (op.matrix() + op.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
  if (es.info() != Eigen::Success) throw NumericalError("eigensystem: diagonalization failed");
  Eigensystem out{es.eigenvalues(), es.eigenvectors()};
  // Phase convention: first largest-magnitude component made real-positive.
  for (Eigen::Index k = 0; k < out.vectors.cols(); ++k) {
    auto col = out.vectors.col(k);
    const double peak = col.cwiseAbs().maxCoeff();
    Eigen::Index arg = 0;
    while (std::abs(col(arg)) < peak * (1.0 - 1e-12)) ++arg;
    col *= std::conj(col(arg)) / std::abs(col(arg));
    col(arg) = std::abs(col(arg));
  }
  return out;
}

std::vector<EnergyLevel> energy_levels(const Operator& h, double rel_tol) {
  const auto es = eigensystem(h);
  const auto& v = es.values;
  const double width = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  const double tol = std::max(1e-12, rel_tol * width);
  std::vector<EnergyLevel> levels;
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (count > 0 && v(i) - v(i - 1) > tol) {
      levels.push_back({sum / count, count});
      sum = 0.0;
      count = 0;
    }
    sum += v(i);
    ++count;
  }
  if (count > 0) levels.push_back({sum / count, count});
  return levels;
}

// ---------------------------------------------------------------------------

SiteOperatorSet SiteOperatorSet::from_system(const SpinSystem& system) {
  SiteOperatorSet set;
  set.dim = system.dimension();
  for (std::size_t i = 0; i < system.size(); ++i) {
    const auto& site = system.site(i);
    const auto s = spin_operators(site.spin);
    set.sites.push_back({site.label, site.g_factor, embed(s.sx, i, system), embed(s.sy, i, system),
                         embed(s.sz, i, system)});
  }
  return set;
}

const SiteOperatorSet::Site& SiteOperatorSet::site(const std::string& label) const {
  for (const auto& s : sites)
    if (s.label == label) return s;
  throw std::invalid_argument("no site labelled '" + label + "'");
}

Operator SiteOperatorSet::total_sx() const {
  Operator t = Operator::zero(dim);
  for (const auto& s : sites) t = t + s.sx;
  return t;
}

Operator SiteOperatorSet::total_sy() const {
  Operator t = Operator::zero(dim);
  for (const auto& s : sites) t = t + s.sy;
  return t;
}

Operator SiteOperatorSet::total_sz() const {
  Operator t = Operator::zero(dim);
  for (const auto& s : sites) t = t + s.sz;
  return t;
}

Operator zeeman(double b_tesla, const SiteOperatorSet& sites) {
  Operator h = Operator::zero(sites.dim);
  for (const auto& s : sites.sites) h = h + (s.g_factor * constants::mu_bohr * b_tesla) * s.sz;
  return h;
}

double expectation(const Operator& op, const DensityMatrix& rho) {
  if (op.dim() != rho.dim()) throw std::invalid_argument("expectation: dimension mismatch");
  return expectation_complex(op, rho.matrix()).real();
}

double expectation(const Operator& op, const StateVector& psi) {
  if (op.dim() != psi.dim()) throw std::invalid_argument("expectation: dimension mismatch");
  return psi.vector().dot(op.matrix() * psi.vector()).real();
}

cplx expectation_complex(const Operator& op, const Matrix& rho) {
  // Tr(O rho) without forming the product.
  return (op.matrix().transpose().cwiseProduct(rho)).sum();
}

}  // namespace exspin
