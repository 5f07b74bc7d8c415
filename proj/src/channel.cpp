#include "dmera/channel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <cstdint>
#include <functional>
#include <set>
#include <unordered_map>

#include <Eigen/Eigenvalues>

namespace dmera {

DensityMatrix::DensityMatrix(Matrix m, double tol) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || !is_power_of_two(m_.rows()))
    throw InvariantError("density matrix must be square with power-of-two dimension");
  const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol) throw InvariantError("density matrix is not Hermitian (deviation " + std::to_string(herm) + ")");
  const double tr_err = std::abs(m_.trace() - cplx{1.0});
  if (tr_err > tol) throw InvariantError("density matrix trace differs from 1 by " + std::to_string(tr_err));
  const Matrix h = (m_ + m_.adjoint()) / 2.0;
  const double min_ev = Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (min_ev < -tol) throw InvariantError("density matrix has negative eigenvalue " + std::to_string(min_ev));
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
  const Eigen::Index d = Eigen::Index{1} << n_qubits;
  return DensityMatrix(Matrix::Identity(d, d) / static_cast<double>(d));
}

Superoperator Superoperator::identity(int n_qubits) {
  const Eigen::Index d = Eigen::Index{1} << (2 * n_qubits);
  return {n_qubits, Matrix::Identity(d, d)};
}

Superoperator Superoperator::from_kraus(const std::vector<Matrix>& kraus) {
  if (kraus.empty()) throw std::invalid_argument("empty Kraus set");
  const Eigen::Index d = kraus[0].rows();
  Matrix s = Matrix::Zero(d * d, d * d);
  for (const auto& k : kraus) s += kron(k.conjugate(), k);
  return {log2_dim(d), s};
}

Vector vectorize(const Matrix& op) {
  return Eigen::Map<const Vector>(op.data(), op.size());  // Eigen storage is column-major
}

Matrix unvectorize(const Vector& v) {
  const Eigen::Index d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (d * d != v.size()) throw std::invalid_argument("vector length is not a square");
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

Channel::Channel(int n_qubits, std::vector<std::pair<double, ChannelProgram>> branches)
    : n_(n_qubits), branches_(std::move(branches)) {
  for (const auto& [w, prog] : branches_)
    if (prog.n_in != n_ || prog.n_out != n_) throw InvariantError("channel branch is not closed on the channel width");
}

Channel::Channel(Superoperator s) : n_(s.n_qubits), dense_(std::move(s)) {}

int Channel::peak_qubits() const {
  int peak = 0;
  for (const auto& b : branches_) peak = std::max(peak, peak_live_qubits(b.second));
  return peak;
}

Matrix Channel::apply(const Matrix& op) const {
  if (dense_) return unvectorize(dense_->matrix * vectorize(op));
  const Eigen::Index d = Eigen::Index{1} << n_;
  Matrix out = Matrix::Zero(d, d);
  for (const auto& [w, prog] : branches_) out += w * run_program(prog, op);
  return out;
}

Superoperator Channel::superoperator() const {
  if (dense_) return *dense_;
  if (n_ > 6) throw std::invalid_argument("dense superoperator is limited to 6 qubits");
  const Eigen::Index d = Eigen::Index{1} << n_;
  Matrix s(d * d, d * d);
  Matrix basis = Matrix::Zero(d, d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) {
      basis(r, c) = 1.0;
      s.col(c * d + r) = vectorize(apply(basis));
      basis(r, c) = 0.0;
    }
  return {n_, s};
}

Channel Channel::mixture(const Channel& a, const Channel& b) {
  if (a.n_ != b.n_) throw std::invalid_argument("mixture of channels with different widths");
  if (a.dense_ || b.dense_) return Channel(mixture_channel(a.superoperator(), b.superoperator()));
  std::vector<std::pair<double, ChannelProgram>> branches;
  for (const auto& [w, p] : a.branches_) branches.emplace_back(w / 2.0, p);
  for (const auto& [w, p] : b.branches_) branches.emplace_back(w / 2.0, p);
  return Channel(a.n_, std::move(branches));
}

namespace {

using OpList = std::vector<ProgramOp>;

ProgramOp unitary_op(Matrix u, std::vector<int> labels) {
  ProgramOp op;
  op.type = ProgramOp::Type::Kraus;
  op.labels = std::move(labels);
  op.kraus = {std::move(u)};
  return op;
}

// Native ops for one layer gate on (a, b) with noise attached to every
// physical MS gate. Runs of unitaries are fused into one 4x4.
OpList gate_ops(const LayerGate& g, Variant variant, const ChannelOptions& opt) {
  const int a = g.qubits[0], b = g.qubits[1];
  OpList ops;
  Matrix acc = Matrix::Identity(4, 4);
  bool pending = false;
  auto flush = [&] {
    if (pending) ops.push_back(unitary_op(acc, {a, b}));
    acc = Matrix::Identity(4, 4);
    pending = false;
  };
  const auto* depol = std::get_if<Depolarizing>(&opt.noise);
  Matrix dep_transfer;
  if (depol && depol->p > 0) dep_transfer = single_qubit_transfer(depolarize_kraus(depol->p / 2.0, depol->bias));
  auto depolarize = [&] {
    if (dep_transfer.size() == 0) return;
    flush();
    for (int q : {a, b}) {
      ProgramOp op;
      op.type = ProgramOp::Type::Superop1;
      op.labels = {q};
      op.prep = dep_transfer;
      ops.push_back(op);
    }
  };
  for (const auto& ng : decompose_gate(g.kind, g.theta, variant)) {
    if (!ng.is_ms()) {
      acc = embed(native_gate(ng.kind, ng.angle), {ng.qubits[0]}, 2) * acc;
      pending = true;
      continue;
    }
    std::vector<double> physical{ng.angle};
    for (int k = 0; k < (opt.repetitions - 1) / 2; ++k) {
      physical.push_back(-ng.angle);
      physical.push_back(ng.angle);
    }
    for (double t : physical) {
      depolarize();
      acc = native_gate(NativeKind::XX, t) * acc;
      pending = true;
      double sigma2 = 0.0;
      if (const auto* m = std::get_if<AngleImprecision>(&opt.noise)) sigma2 = m->sigma2;
      if (const auto* m = std::get_if<AngleProportional>(&opt.noise)) sigma2 = m->sigma2 * std::abs(t) / (kPi / 2);
      const double q = flip_probability(sigma2);
      if (q > 0) {
        flush();
        ProgramOp op;
        op.type = ProgramOp::Type::FlipXX;
        op.labels = {a, b};
        op.p = q;
        ops.push_back(op);
      }
      depolarize();
    }
  }
  flush();
  return ops;
}

// Greedy topological order. Ready gates are ranked by the change in live
// qubits they cause (fresh ancillas minus qubits freed), then by
// position + slope * time.
std::vector<std::size_t> sweep_order(const LayerCircuit& c, double slope, bool greedy_live) {
  const std::size_t n = c.gates.size();
  std::vector<int> time(n, 0);
  std::vector<std::vector<std::size_t>> preds(n);
  std::map<int, std::size_t> last;
  std::map<int, int> uses;
  for (std::size_t i = 0; i < n; ++i) {
    for (int q : c.gates[i].qubits) {
      if (auto it = last.find(q); it != last.end()) {
        preds[i].push_back(it->second);
        time[i] = std::max(time[i], time[it->second] + 1);
      }
      last[q] = i;
      ++uses[q];
    }
  }
  const std::set<int> carried(c.carried.begin(), c.carried.end());
  const std::set<int> discard(c.discard.begin(), c.discard.end());
  std::set<int> live(carried);
  std::vector<bool> done(n, false);
  std::vector<std::size_t> order;
  while (order.size() < n) {
    std::size_t best = n;
    double best_key = 0;
    int best_delta = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      if (!std::all_of(preds[i].begin(), preds[i].end(), [&](std::size_t p) { return done[p]; })) continue;
      int delta = 0;
      if (greedy_live)
        for (int q : c.gates[i].qubits) {
          if (!live.count(q)) ++delta;
          if (uses[q] == 1 && discard.count(q)) --delta;
        }
      const double key = std::min(c.gates[i].qubits[0], c.gates[i].qubits[1]) + slope * time[i];
      if (best == n || delta < best_delta || (delta == best_delta && key < best_key - 1e-12)) {
        best = i;
        best_key = key;
        best_delta = delta;
      }
    }
    done[best] = true;
    order.push_back(best);
    for (int q : c.gates[best].qubits) {
      live.insert(q);
      if (--uses[q] == 0 && discard.count(q)) live.erase(q);
    }
  }
  return order;
}

// Exact minimum-peak order by memoized search over sets of executed gates.
// Returns an empty order when the search space is too large.
std::vector<std::size_t> min_peak_order(const LayerCircuit& c) {
  const std::size_t n = c.gates.size();
  if (n == 0 || n > 63) return {};
  std::vector<std::uint64_t> preds(n, 0), touch;
  std::map<int, std::size_t> last;
  std::map<int, std::uint64_t> users;
  for (std::size_t i = 0; i < n; ++i)
    for (int q : c.gates[i].qubits) {
      if (auto it = last.find(q); it != last.end()) preds[i] |= std::uint64_t{1} << it->second;
      last[q] = i;
      users[q] |= std::uint64_t{1} << i;
    }
  const std::set<int> carried(c.carried.begin(), c.carried.end());
  const std::set<int> discard(c.discard.begin(), c.discard.end());
  std::vector<int> qubits;
  for (const auto& [q, u] : users) qubits.push_back(q);
  auto live_after = [&](std::uint64_t done) {
    int live = 0;
    for (int q : qubits) {
      const std::uint64_t u = users[q];
      const bool started = carried.count(q) || (u & done);
      const bool finished = discard.count(q) && (u & done) == u;
      if (started && !finished) ++live;
    }
    return live;
  };
  const std::uint64_t all = (n == 64) ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  std::unordered_map<std::uint64_t, std::pair<int, int>> memo;  // done -> (peak, next gate)
  bool overflow = false;
  std::function<int(std::uint64_t)> solve = [&](std::uint64_t done) -> int {
    if (done == all) return live_after(done);
    if (auto it = memo.find(done); it != memo.end()) return it->second.first;
    if (memo.size() > 4'000'000) {
      overflow = true;
      return 0;
    }
    int best = 1 << 20, arg = -1;
    for (std::size_t i = 0; i < n && !overflow; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      if ((done & bit) || (preds[i] & done) != preds[i]) continue;
      // Live count while gate i runs: its qubits are live before any discard.
      int during = live_after(done);
      for (int q : c.gates[i].qubits)
        if (!carried.count(q) && !(users[q] & done)) ++during;
      const int peak = std::max(during, solve(done | bit));
      if (peak < best) {
        best = peak;
        arg = static_cast<int>(i);
      }
    }
    memo[done] = {best, arg};
    return best;
  };
  solve(0);
  if (overflow) return {};
  std::vector<std::size_t> order;
  for (std::uint64_t done = 0; done != all;) {
    const int i = memo.at(done).second;
    order.push_back(static_cast<std::size_t>(i));
    done |= std::uint64_t{1} << i;
  }
  return order;
}

ChannelProgram schedule(const LayerCircuit& c, const std::vector<std::size_t>& order, const ChannelOptions& opt) {
  ChannelProgram p;
  p.n_in = c.n_in;
  p.n_out = static_cast<int>(c.output_window.size());
  p.input_labels.assign(c.n_in, -1);
  for (std::size_t i = 0; i < c.carried.size(); ++i) p.input_labels.at(c.input_index[i]) = c.carried[i];

  const std::set<int> prep(c.prep.begin(), c.prep.end());
  const std::set<int> discard(c.discard.begin(), c.discard.end());
  std::map<int, std::size_t> last_use;
  for (std::size_t k = 0; k < order.size(); ++k)
    for (int q : c.gates[order[k]].qubits) last_use[q] = k;

  Matrix zero = Matrix::Zero(2, 2);
  zero(0, 0) = 1.0;
  const Matrix h = native_gate(NativeKind::H);
  const bool zz = c.convention == Convention::ZZ;
  std::set<int> live;
  auto prepare = [&](int q) {
    ProgramOp op;
    op.type = ProgramOp::Type::Prep;
    op.labels = {q};
    op.prep = zero;
    p.ops.push_back(op);
    live.insert(q);
  };
  auto drop = [&](int q) {
    ProgramOp op;
    op.type = ProgramOp::Type::Discard;
    op.labels = {q};
    p.ops.push_back(op);
    live.erase(q);
  };

  for (int q : c.carried) {
    live.insert(q);
    if (zz) p.ops.push_back(unitary_op(h, {q}));
  }
  // Carried qubits that no gate touches.
  for (int q : c.carried)
    if (discard.count(q) && !last_use.count(q)) drop(q);

  for (std::size_t k = 0; k < order.size(); ++k) {
    const LayerGate& g = c.gates[order[k]];
    for (int q : g.qubits)
      if (!live.count(q)) {
        if (!prep.count(q)) throw InvariantError("gate touches a qubit that is neither carried nor prepared");
        prepare(q);
      }
    for (auto& op : gate_ops(g, c.variant, opt)) p.ops.push_back(std::move(op));
    for (int q : g.qubits)
      if (last_use.at(q) == k && discard.count(q)) drop(q);
  }
  for (int q : c.output_window) {
    if (!live.count(q)) prepare(q);
    if (zz) p.ops.push_back(unitary_op(h, {q}));
  }
  p.output_labels = c.output_window;
  return p;
}

}  // namespace

ChannelProgram compile_cone(const LayerCircuit& cone, const ChannelOptions& options) {
  cone.validate();
  validate(options.noise);
  if (options.repetitions < 1 || options.repetitions % 2 == 0)
    throw std::invalid_argument("repetitions must be odd and >= 1");
  ChannelProgram best;
  int best_peak = 0;
  if (auto order = min_peak_order(cone); !order.empty()) {
    best = schedule(cone, order, options);
    best_peak = peak_live_qubits(best);
  }
  for (int mode = 0; mode < 18; ++mode) {
    const double slopes[9] = {-3.0, -2.0, -1.5, -1.0, 1.0, 1.5, 2.0, 3.0, 1e6};
    ChannelProgram p = schedule(cone, sweep_order(cone, slopes[mode % 9], mode >= 9), options);
    const int peak = peak_live_qubits(p);
    if (best.ops.empty() || peak < best_peak) {
      best = std::move(p);
      best_peak = peak;
    }
  }
  return best;
}

Channel assemble_channel(const LayerCircuit& cone, const ChannelOptions& options) {
  if (!cone.closed()) throw InvariantError("causal cone does not close on its output width");
  return Channel(cone.n_in, {{1.0, compile_cone(cone, options)}});
}

Superoperator assemble_superoperator(const LayerCircuit& cone, const NoiseModel& noise) {
  return assemble_channel(cone, {noise, 1}).superoperator();
}

ChannelKind parse_channel_kind(const std::string& text) {
  if (text == "left") return ChannelKind::Left;
  if (text == "right") return ChannelKind::Right;
  if (text == "mixture") return ChannelKind::Mixture;
  throw std::invalid_argument("unknown channel kind '" + text + "' (expected left|right|mixture)");
}

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::Left: return "left";
    case ChannelKind::Right: return "right";
    case ChannelKind::Mixture: return "mixture";
  }
  return "?";
}

Channel layer_channel(const AngleProfile& profile, ChannelKind kind, const ChannelOptions& options,
                      Convention convention) {
  const int n = channel_width(profile.depth);
  auto side_channel = [&](Side side) {
    LayerCircuit cone = causal_cone(profile, n, side);
    if (convention == Convention::ZZ) cone = swap_convention(cone);
    return assemble_channel(cone, options);
  };
  switch (kind) {
    case ChannelKind::Left: return side_channel(Side::Left);
    case ChannelKind::Right: return side_channel(Side::Right);
    case ChannelKind::Mixture: return Channel::mixture(side_channel(Side::Left), side_channel(Side::Right));
  }
  throw std::invalid_argument("bad channel kind");
}

namespace {
DensityMatrix finish(Matrix out) {
  const double herm = (out - out.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-8) throw InvariantError("channel output drifted from Hermitian by " + std::to_string(herm));
  return DensityMatrix((out + out.adjoint()) / 2.0);
}
}  // namespace

DensityMatrix apply_channel(const Superoperator& s, const DensityMatrix& rho) {
  if (s.n_qubits != rho.n_qubits()) throw std::invalid_argument("superoperator and state widths differ");
  return finish(unvectorize(s.matrix * vectorize(rho.matrix())));
}

DensityMatrix apply_channel(const Channel& channel, const DensityMatrix& rho) {
  if (channel.n_qubits() != rho.n_qubits()) throw std::invalid_argument("channel and state widths differ");
  return finish(channel.apply(rho.matrix()));
}

Superoperator mixture_channel(const Superoperator& left, const Superoperator& right) {
  if (left.n_qubits != right.n_qubits || left.matrix.rows() != right.matrix.rows())
    throw std::invalid_argument("mixture of superoperators with different dimensions");
  return {left.n_qubits, (left.matrix + right.matrix) / 2.0};
}

CptpReport verify_cptp(const Superoperator& s) {
  const Eigen::Index d = Eigen::Index{1} << s.n_qubits;
  if (s.matrix.rows() != d * d || s.matrix.cols() != d * d) throw std::invalid_argument("superoperator dimension mismatch");
  CptpReport r;
  const Vector id = vectorize(Matrix::Identity(d, d));
  r.tp_residual = (id.adjoint() * s.matrix - id.adjoint()).cwiseAbs().maxCoeff();
  Matrix choi(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) choi(i * d + a, j * d + b) = s.matrix(b * d + a, j * d + i);
  const Matrix herm = (choi + choi.adjoint()) / 2.0;
  r.choi_min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<Matrix>(herm, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  r.max_abs_eigenvalue = Eigen::ComplexEigenSolver<Matrix>(s.matrix, false).eigenvalues().cwiseAbs().maxCoeff();
  r.pass = r.tp_residual < 1e-10 && r.choi_min_eigenvalue >= -1e-10 && r.max_abs_eigenvalue <= 1 + 1e-10;
  return r;
}

}  // namespace dmera
