#include "jdpo/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace jdpo {
namespace {

// Constraint with its PSD part expanded to both triangles.
struct Expanded {
  std::vector<SymEntry> full;
  std::vector<LpEntry> lp;
  double rhs = 0;
};

std::vector<SymEntry> Expand(const std::vector<SymEntry>& entries) {
  std::vector<SymEntry> out;
  out.reserve(2 * entries.size());
  for (const SymEntry& e : entries) {
    out.push_back(e);
    if (e.row != e.col) out.push_back({e.col, e.row, e.value});
  }
  return out;
}

class Operator {
 public:
  Operator(const SdpProblem& p) : n_(p.psd_dim), l_(p.lp_dim) {
    rows_.reserve(p.constraints.size());
    for (const SdpConstraint& c : p.constraints) rows_.push_back({Expand(c.psd), c.lp, c.rhs});
  }

  int size() const { return static_cast<int>(rows_.size()); }
  const Expanded& row(int k) const { return rows_[k]; }

  // A(W) + a^T v for any square W.
  Vector Apply(const Matrix& W, const Vector& v) const {
    Vector out = Vector::Zero(size());
    for (int k = 0; k < size(); ++k) {
      double sum = 0;
      for (const SymEntry& e : rows_[k].full) sum += e.value * W(e.row, e.col);
      for (const LpEntry& e : rows_[k].lp) sum += e.value * v(e.index);
      out(k) = sum;
    }
    return out;
  }

  void Adjoint(const Vector& y, Matrix* psd, Vector* lp) const {
    psd->setZero(n_, n_);
    lp->setZero(l_);
    for (int k = 0; k < size(); ++k) {
      for (const SymEntry& e : rows_[k].full) (*psd)(e.row, e.col) += y(k) * e.value;
      for (const LpEntry& e : rows_[k].lp) (*lp)(e.index) += y(k) * e.value;
    }
  }

  // M_kl = <A_k, X A_l S^-1> + a_k^T diag(x / s) a_l.
  Matrix Schur(const Matrix& X, const Matrix& Sinv, const Vector& ratio) const {
    const int m = size();
    Matrix M(m, m);
    for (int k = 0; k < m; ++k) {
      for (int l = k; l < m; ++l) {
        double sum = 0;
        for (const SymEntry& a : rows_[k].full) {
          for (const SymEntry& b : rows_[l].full) {
            sum += a.value * b.value * X(a.row, b.row) * Sinv(b.col, a.col);
          }
        }
        for (const LpEntry& a : rows_[k].lp) {
          for (const LpEntry& b : rows_[l].lp) {
            if (a.index == b.index) sum += a.value * b.value * ratio(a.index);
          }
        }
        M(k, l) = sum;
        M(l, k) = sum;
      }
    }
    return M;
  }

 private:
  int n_;
  int l_;
  std::vector<Expanded> rows_;
};

// Largest alpha with X + alpha dX PSD.
double MaxPsdStep(const Matrix& X, const Matrix& dX) {
  if (X.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::LLT<Matrix> llt(X);
  const Matrix Linv = llt.matrixL().solve(Matrix::Identity(X.rows(), X.cols()));
  Matrix T = Linv * dX * Linv.transpose();
  T = 0.5 * (T + T.transpose());
  const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(T, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
  return lmin >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double MaxLpStep(const Vector& x, const Vector& dx) {
  double step = std::numeric_limits<double>::infinity();
  for (int i = 0; i < x.size(); ++i) {
    if (dx(i) < 0) step = std::min(step, -x(i) / dx(i));
  }
  return step;
}

Matrix Sym(const Matrix& W) { return 0.5 * (W + W.transpose()); }

}  // namespace

Matrix DenseSymmetric(const std::vector<SymEntry>& entries, int dim) {
  Matrix out = Matrix::Zero(dim, dim);
  for (const SymEntry& e : entries) {
    out(e.row, e.col) += e.value;
    if (e.row != e.col) out(e.col, e.row) += e.value;
  }
  return out;
}

SdpResult SolveSdp(const SdpProblem& p, const SdpOptions& options) {
  const int n = p.psd_dim, L = p.lp_dim;
  if (n <= 0) throw std::invalid_argument("SDP needs a PSD block");
  if (p.c_lp.size() != L) throw std::invalid_argument("SDP LP cost has the wrong length");
  const Operator A(p);
  const int m = A.size();
  Vector b(m);
  for (int k = 0; k < m; ++k) b(k) = p.constraints[k].rhs;
  const Matrix C = DenseSymmetric(p.c_psd, n);
  const Vector& c = p.c_lp;

  double max_a = 0;
  for (int k = 0; k < m; ++k) {
    double norm2 = 0;
    for (const SymEntry& e : A.row(k).full) norm2 += e.value * e.value;
    for (const LpEntry& e : A.row(k).lp) norm2 += e.value * e.value;
    max_a = std::max(max_a, std::sqrt(norm2));
  }
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  double xi_p = std::max(10.0, sqrt_n);
  for (int k = 0; k < m; ++k) {
    double norm2 = 0;
    for (const SymEntry& e : A.row(k).full) norm2 += e.value * e.value;
    xi_p = std::max(xi_p, sqrt_n * (1 + std::abs(b(k))) / (1 + std::sqrt(norm2)));
  }
  const double c_norm = std::sqrt(C.squaredNorm() + c.squaredNorm());
  const double xi_d = std::max({10.0, sqrt_n, max_a, c_norm});

  SdpResult r;
  r.X = xi_p * Matrix::Identity(n, n);
  r.S = xi_d * Matrix::Identity(n, n);
  r.x_lp = Vector::Constant(L, xi_p);
  r.s_lp = Vector::Constant(L, xi_d);
  r.y = Vector::Zero(m);
  const double b_norm = b.norm();
  const double dim = n + L;

  Matrix Aty;
  Vector aty;
  for (int it = 0; it <= options.max_iterations; ++it) {
    r.iterations = it;
    const Vector rp = b - A.Apply(r.X, r.x_lp);
    A.Adjoint(r.y, &Aty, &aty);
    const Matrix Rd = C - Aty - r.S;
    const Vector rd = c - aty - r.s_lp;
    const double mu = ((r.X.cwiseProduct(r.S)).sum() + r.x_lp.dot(r.s_lp)) / dim;
    r.primal_objective = C.cwiseProduct(r.X).sum() + c.dot(r.x_lp);
    r.dual_objective = b.dot(r.y);
    r.relative_gap = std::abs(r.primal_objective - r.dual_objective) /
                     (1 + std::abs(r.primal_objective) + std::abs(r.dual_objective));
    r.primal_infeasibility = rp.norm() / (1 + b_norm);
    r.dual_infeasibility = std::sqrt(Rd.squaredNorm() + rd.squaredNorm()) / (1 + c_norm);
    if (r.relative_gap <= options.tolerance && r.primal_infeasibility <= options.tolerance &&
        r.dual_infeasibility <= options.tolerance) {
      r.converged = true;
      break;
    }
    if (it == options.max_iterations) break;

    Eigen::LLT<Matrix> s_llt(r.S);
    if (s_llt.info() != Eigen::Success) break;
    const Matrix Sinv = s_llt.solve(Matrix::Identity(n, n));
    const Vector ratio = r.x_lp.cwiseQuotient(r.s_lp);
    Matrix M = A.Schur(r.X, Sinv, ratio);
    Eigen::LLT<Matrix> m_llt(M);
    if (m_llt.info() != Eigen::Success) {
      M.diagonal().array() += 1e-12 * std::max(1.0, M.diagonal().maxCoeff());
      m_llt.compute(M);
      if (m_llt.info() != Eigen::Success) break;
    }
    const Matrix XRdSinv = r.X * Rd * Sinv;
    const Vector ratio_rd = ratio.cwiseProduct(rd);

    // Solves for the direction given the complementarity right-hand sides.
    auto direction = [&](const Matrix& Rc, const Vector& rc, Matrix* dX, Vector* dx, Vector* dy,
                         Matrix* dS, Vector* ds) {
      const Vector rhs = rp - A.Apply(Rc - XRdSinv, rc - ratio_rd);
      *dy = m_llt.solve(rhs);
      Matrix Atdy;
      Vector atdy;
      A.Adjoint(*dy, &Atdy, &atdy);
      *dS = Rd - Atdy;
      *ds = rd - atdy;
      *dX = Sym(Rc - r.X * *dS * Sinv);
      *dx = rc - ratio.cwiseProduct(*ds);
    };

    Matrix dX, dS;
    Vector dx, dy, ds;
    direction(-r.X, -r.x_lp, &dX, &dx, &dy, &dS, &ds);
    double ap = std::min(1.0, std::min(MaxPsdStep(r.X, dX), MaxLpStep(r.x_lp, dx)));
    double ad = std::min(1.0, std::min(MaxPsdStep(r.S, dS), MaxLpStep(r.s_lp, ds)));
    const double mu_aff = (((r.X + ap * dX).cwiseProduct(r.S + ad * dS)).sum() +
                           (r.x_lp + ap * dx).dot(r.s_lp + ad * ds)) /
                          dim;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3), 0.0, 1.0);

    const Matrix Rc = sigma * mu * Sinv - r.X - dX * dS * Sinv;
    const Vector rc = (sigma * mu * r.s_lp.cwiseInverse() - r.x_lp -
                       dx.cwiseProduct(ds).cwiseQuotient(r.s_lp))
                          .eval();
    direction(Rc, rc, &dX, &dx, &dy, &dS, &ds);
    ap = std::min(1.0, 0.95 * std::min(MaxPsdStep(r.X, dX), MaxLpStep(r.x_lp, dx)));
    ad = std::min(1.0, 0.95 * std::min(MaxPsdStep(r.S, dS), MaxLpStep(r.s_lp, ds)));
    r.X = Sym(r.X + ap * dX);
    r.x_lp += ap * dx;
    r.y += ad * dy;
    r.S = Sym(r.S + ad * dS);
    r.s_lp += ad * ds;
  }
  return r;
}

void WriteSdp(std::ostream& out, const SdpProblem& p) {
  out << "psd_dim " << p.psd_dim << "\nlp_dim " << p.lp_dim << "\nconstraints "
      << p.constraints.size() << "\nobjective\n";
  for (const SymEntry& e : p.c_psd) out << "  " << e.row << ' ' << e.col << ' ' << e.value << '\n';
  for (int i = 0; i < p.c_lp.size(); ++i) {
    if (p.c_lp(i) != 0) out << "  lp " << i << ' ' << p.c_lp(i) << '\n';
  }
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    const SdpConstraint& c = p.constraints[k];
    out << "constraint " << k << " rhs " << c.rhs << '\n';
    for (const SymEntry& e : c.psd) out << "  " << e.row << ' ' << e.col << ' ' << e.value << '\n';
    for (const LpEntry& e : c.lp) out << "  lp " << e.index << ' ' << e.value << '\n';
  }
}

}  // namespace jdpo
