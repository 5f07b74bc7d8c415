#include "dmera/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Eigenvalues>

namespace dmera {

namespace {

using LinearOp = std::function<Vector(const Vector&)>;

bool by_modulus(const Eigenpair& a, const Eigenpair& b) {
  const double ma = std::abs(a.lambda), mb = std::abs(b.lambda);
  if (std::abs(ma - mb) > 1e-13) return ma > mb;
  if (std::abs(a.lambda.real() - b.lambda.real()) > 1e-13) return a.lambda.real() > b.lambda.real();
  return a.lambda.imag() > b.lambda.imag();
}

Eigenpair certify(const LinearOp& op, cplx lambda, Vector v) {
  v.normalize();
  Eigenpair e;
  e.lambda = lambda;
  e.delta = scaling_dimension(lambda);
  e.residual = (op(v) - lambda * v).norm();
  e.vector = std::move(v);
  return e;
}

// Swaps diagonal entries i, i+1 of upper-triangular t, updating q.
void swap_schur(Matrix& t, Matrix& q, Eigen::Index i) {
  const cplx a = t(i, i), b = t(i, i + 1), c = t(i + 1, i + 1);
  if (a == c) return;
  Eigen::Vector2cd x(b, c - a);
  x.normalize();
  Eigen::Matrix2cd g;
  g << x(0), -std::conj(x(1)), x(1), std::conj(x(0));
  t.middleCols(i, 2) = t.middleCols(i, 2) * g;
  t.middleRows(i, 2) = g.adjoint() * t.middleRows(i, 2);
  q.middleCols(i, 2) = q.middleCols(i, 2) * g;
  t(i + 1, i) = 0.0;
}

// Zeroes the components outside the requested parity sector.
void project_sector(Vector& v, int parity) {
  if (parity == 0) return;
  const Eigen::Index d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) {
      const int odd = (__builtin_popcountll(static_cast<unsigned long long>(r)) +
                       __builtin_popcountll(static_cast<unsigned long long>(c))) % 2;
      if (odd != (parity < 0)) v(c * d + r) = 0.0;
    }
}

std::vector<Eigen::Index> sector_indices(Eigen::Index dim, int parity) {
  std::vector<Eigen::Index> idx;
  const Eigen::Index d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(dim))));
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) {
      const int odd = (__builtin_popcountll(static_cast<unsigned long long>(r)) +
                       __builtin_popcountll(static_cast<unsigned long long>(c))) % 2;
      if (parity == 0 || odd == (parity < 0)) idx.push_back(c * d + r);
    }
  return idx;
}

// Krylov-Schur iteration for the k eigenvalues of largest modulus.
Spectrum krylov_schur(const LinearOp& op, Eigen::Index dim, int k, const SpectralOptions& opt) {
  const Eigen::Index m = std::min<Eigen::Index>(dim, std::max(2 * k + 12, 20));
  const Eigen::Index keep = std::min<Eigen::Index>(m - 1, std::max<Eigen::Index>(k + (m - k) / 2, k + 1));
  Matrix v(dim, m + 1);
  Matrix h = Matrix::Zero(m, m);
  Vector r = Vector::Zero(m);  // A V = V H + f r^T with f = v.col(j)

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  Vector start(dim);
  if (opt.start.size() == dim) {
    start = opt.start;
  } else {
    for (Eigen::Index i = 0; i < dim; ++i) start(i) = cplx(normal(rng), normal(rng));
  }
  project_sector(start, opt.parity);
  v.col(0) = start.normalized();
  Eigen::Index j = 0;  // current basis size

  auto extend = [&](Eigen::Index to) {
    for (; j < to; ++j) {
      Vector w = op(v.col(j));
      project_sector(w, opt.parity);
      Vector coeff = v.leftCols(j + 1).adjoint() * w;
      w -= v.leftCols(j + 1) * coeff;
      const Vector again = v.leftCols(j + 1).adjoint() * w;
      w -= v.leftCols(j + 1) * again;
      coeff += again;
      if (j > 0) h.row(j).head(j) = r.head(j).transpose();
      h.col(j).head(j + 1) = coeff;
      const double beta = w.norm();
      r.setZero();
      r(j) = beta;
      if (beta < 1e-300) {
        // Invariant subspace: continue with a fresh orthogonal direction.
        Vector fresh(dim);
        for (Eigen::Index i = 0; i < dim; ++i) fresh(i) = cplx(normal(rng), normal(rng));
        project_sector(fresh, opt.parity);
        fresh -= v.leftCols(j + 1) * (v.leftCols(j + 1).adjoint() * fresh);
        v.col(j + 1) = fresh.normalized();
        r(j) = 0.0;
      } else {
        v.col(j + 1) = w / beta;
      }
    }
  };

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    extend(m);
    Eigen::ComplexSchur<Matrix> schur(h.topLeftCorner(m, m));
    Matrix t = schur.matrixT();
    Matrix q = schur.matrixU();
    // Bubble the diagonal into descending modulus.
    for (Eigen::Index pass = 0; pass < m; ++pass)
      for (Eigen::Index i = 0; i + 1 < m; ++i)
        if (std::abs(t(i + 1, i + 1)) > std::abs(t(i, i)) + 1e-14) swap_schur(t, q, i);
    // Ritz residuals of the wanted values.
    const Matrix tk = t.topLeftCorner(k, k);
    Eigen::ComplexEigenSolver<Matrix> small(tk);
    const Vector rq = (r.head(m).transpose() * q.leftCols(k)).transpose();
    bool converged = true;
    for (int i = 0; i < k && converged; ++i) {
      const Vector y = small.eigenvectors().col(i).normalized();
      if (std::abs(rq.dot(y.conjugate())) > 0.1 * opt.residual_tol) converged = false;
    }
    const Vector f = v.col(m);
    if (converged || restart == opt.max_restarts) {
      Spectrum s;
      const Matrix basis = v.leftCols(m) * q.leftCols(k);
      for (int i = 0; i < k; ++i) s.pairs.push_back(certify(op, small.eigenvalues()(i), basis * small.eigenvectors().col(i)));
      std::sort(s.pairs.begin(), s.pairs.end(), by_modulus);
      return s;
    }
    // Truncate to the leading `keep` Schur vectors.
    const Matrix vk = v.leftCols(m) * q.leftCols(keep);
    v.leftCols(keep) = vk;
    v.col(keep) = f;
    h.setZero();
    h.topLeftCorner(keep, keep) = t.topLeftCorner(keep, keep);
    const Vector rk = (r.head(m).transpose() * q.leftCols(keep)).transpose();
    r.setZero();
    r.head(keep) = rk;
    j = keep;
  }
  throw ConvergenceError("Krylov-Schur did not converge");
}

Spectrum dense_spectrum(const Matrix& s, int k, int parity) {
  const std::vector<Eigen::Index> idx = sector_indices(s.rows(), parity);
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  if (k > m) throw std::invalid_argument("k exceeds the sector dimension");
  Matrix block(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) block(i, j) = s(idx[i], idx[j]);
  Eigen::ComplexEigenSolver<Matrix> es(block);
  LinearOp op = [&s](const Vector& x) { return Vector(s * x); };
  Spectrum out;
  for (Eigen::Index i = 0; i < m; ++i) {
    Vector v = Vector::Zero(s.rows());
    for (Eigen::Index j = 0; j < m; ++j) v(idx[j]) = es.eigenvectors()(j, i);
    out.pairs.push_back(certify(op, es.eigenvalues()(i), v));
  }
  std::sort(out.pairs.begin(), out.pairs.end(), by_modulus);
  out.pairs.resize(k);
  return out;
}

void check_residuals(const Spectrum& s, double tol) {
  for (const auto& p : s.pairs)
    if (!(p.residual < tol))
      throw ConvergenceError("eigenpair residual " + std::to_string(p.residual) + " exceeds " + std::to_string(tol));
}

}  // namespace

int operator_parity(const Vector& v, int n_qubits) {
  const Eigen::Index d = Eigen::Index{1} << n_qubits;
  double even = 0.0, odd = 0.0;
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) {
      const double w = std::norm(v(c * d + r));
      if ((__builtin_popcountll(static_cast<unsigned long long>(r)) +
           __builtin_popcountll(static_cast<unsigned long long>(c))) % 2)
        odd += w;
      else
        even += w;
    }
  const double total = even + odd;
  if (odd <= 1e-8 * total) return 1;
  if (even <= 1e-8 * total) return -1;
  return 0;
}

double scaling_dimension(cplx lambda) {
  const double mod = std::abs(lambda);
  if (mod == 0.0) return std::numeric_limits<double>::infinity();
  return -std::log2(mod);
}

Spectrum spectrum_topk(const Superoperator& s, int k, const SpectralOptions& options) {
  const Eigen::Index dim = s.matrix.rows();
  if (k < 1 || k > dim) throw std::invalid_argument("k must be in [1, 4^n]");
  Spectrum out;
  if (dim <= 256 || 4 * k > dim) {
    out = dense_spectrum(s.matrix, k, options.parity);
  } else {
    LinearOp op = [&s](const Vector& x) { return Vector(s.matrix * x); };
    out = krylov_schur(op, dim, k, options);
  }
  check_residuals(out, options.residual_tol);
  return out;
}

Spectrum spectrum_topk(const Channel& channel, int k, const SpectralOptions& options) {
  const int n = channel.n_qubits();
  if (n <= 4) return spectrum_topk(channel.superoperator(), k, options);
  const Eigen::Index dim = Eigen::Index{1} << (2 * n);
  if (k < 1 || k > dim) throw std::invalid_argument("k must be in [1, 4^n]");
  LinearOp op = [&channel](const Vector& x) { return vectorize(channel.apply(unvectorize(x))); };
  Spectrum out = krylov_schur(op, dim, k, options);
  check_residuals(out, options.residual_tol);
  return out;
}

std::vector<ScalingDimension> scaling_dimensions(const Spectrum& spectrum) {
  std::vector<ScalingDimension> out;
  for (const auto& p : spectrum.pairs) out.push_back({p.delta, std::abs(p.lambda.imag()) > 1e-8});
  return out;
}

double trace_norm(const Matrix& m) {
  const Matrix h = (m + m.adjoint()) / 2.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().sum();
}

namespace {

FixedPoint iterate(const std::function<Matrix(const Matrix&)>& apply, Matrix rho, double tol, long max_iters) {
  for (long it = 0; it < max_iters; ++it) {
    Matrix next = apply(rho);
    next = (next + next.adjoint()) / 2.0;
    next /= next.trace().real();
    const double change = trace_norm(next - rho);
    rho = std::move(next);
    if (change < tol) return {DensityMatrix(rho, 1e-9), it + 1, change};
  }
  throw ConvergenceError("fixed-point iteration did not converge in " + std::to_string(max_iters) + " iterations");
}

}  // namespace

FixedPoint fixed_point(const Channel& channel, double tol, long max_iters, bool accelerate) {
  const int n = channel.n_qubits();
  const Eigen::Index d = Eigen::Index{1} << n;
  Matrix rho = Matrix::Identity(d, d) / static_cast<double>(d);
  if (accelerate) {
    SpectralOptions opt;
    opt.residual_tol = 1e-9;
    // The maximally mixed start keeps the basis in the symmetric sector of the fixed point.
    opt.start = vectorize(rho);
    LinearOp op = [&channel](const Vector& x) { return vectorize(channel.apply(unvectorize(x))); };
    const Spectrum s = krylov_schur(op, d * d, 1, opt);
    Matrix lead = unvectorize(s.pairs.at(0).vector);
    const cplx tr = lead.trace();
    if (std::abs(tr) > 1e-8) {
      lead /= tr;
      rho = (lead + lead.adjoint()) / 2.0;
    }
  }
  return iterate([&channel](const Matrix& x) { return channel.apply(x); }, rho, tol, max_iters);
}

FixedPoint fixed_point(const Superoperator& s, double tol, long max_iters) {
  const Eigen::Index d = Eigen::Index{1} << s.n_qubits;
  Matrix rho = Matrix::Identity(d, d) / static_cast<double>(d);
  return iterate([&s](const Matrix& x) { return unvectorize(s.matrix * vectorize(x)); }, rho, tol, max_iters);
}

namespace {
// Ising CFT: diagonal combinations of the three Virasoro characters, with
// level degeneracies read off their q-expansions.
constexpr CftLevel kIsingLevels[] = {
    {0.0, 1},   {0.125, 1}, {1.0, 1},   {1.125, 2}, {2.0, 4},   {2.125, 3},
    {3.0, 5},   {3.125, 6}, {4.0, 9},   {4.125, 9}, {5.0, 13},  {5.125, 14},
};
}  // namespace

std::vector<CftLevel> ising_cft_levels(int count) {
  if (count < 0 || count > 64) throw std::invalid_argument("count must be in [0, 64]");
  std::vector<CftLevel> out;
  int total = 0;
  for (const auto& l : kIsingLevels) {
    if (total >= count) break;
    out.push_back(l);
    total += l.multiplicity;
  }
  return out;
}

std::vector<double> ising_cft_reference(int count) {
  std::vector<double> out;
  for (const auto& l : ising_cft_levels(count))
    for (int i = 0; i < l.multiplicity && static_cast<int>(out.size()) < count; ++i) out.push_back(l.delta);
  return out;
}

}  // namespace dmera
