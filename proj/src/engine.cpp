#include "dmera/engine.hpp"

#include <algorithm>

namespace dmera {

namespace kernels {

namespace {
inline std::size_t insert_zero(std::size_t x, int bit) {
  const std::size_t low = x & ((std::size_t{1} << bit) - 1);
  return ((x >> bit) << (bit + 1)) | low;
}
}  // namespace

void apply_1q(cplx* data, int total_bits, int bit, const cplx* m) {
  const std::size_t half = std::size_t{1} << (total_bits - 1);
  const std::size_t step = std::size_t{1} << bit;
  const cplx m00 = m[0], m01 = m[1], m10 = m[2], m11 = m[3];
  if (m01 == cplx{} && m10 == cplx{}) {
    for (std::size_t i = 0; i < half; ++i) {
      const std::size_t i0 = insert_zero(i, bit);
      data[i0] *= m00;
      data[i0 | step] *= m11;
    }
    return;
  }
  for (std::size_t i = 0; i < half; ++i) {
    const std::size_t i0 = insert_zero(i, bit);
    const cplx a = data[i0], b = data[i0 | step];
    data[i0] = m00 * a + m01 * b;
    data[i0 | step] = m10 * a + m11 * b;
  }
}

void apply_2q(cplx* data, int total_bits, int bit0, int bit1, const cplx* m) {
  const std::size_t quarter = std::size_t{1} << (total_bits - 2);
  const int lo = std::min(bit0, bit1), hi = std::max(bit0, bit1);
  const std::size_t s0 = std::size_t{1} << bit0, s1 = std::size_t{1} << bit1;
  // Parity-preserving gates only couple {00, 11} and {01, 10}.
  bool parity = true;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (((r ^ c) == 1 || (r ^ c) == 2) && m[r * 4 + c] != cplx{}) parity = false;
  if (parity) {
    const cplx a00 = m[0], a03 = m[3], a30 = m[12], a33 = m[15];
    const cplx b11 = m[5], b12 = m[6], b21 = m[9], b22 = m[10];
    for (std::size_t i = 0; i < quarter; ++i) {
      const std::size_t b = insert_zero(insert_zero(i, lo), hi);
      const std::size_t i1 = b | s1, i2 = b | s0, i3 = b | s0 | s1;
      const cplx v0 = data[b], v1 = data[i1], v2 = data[i2], v3 = data[i3];
      data[b] = a00 * v0 + a03 * v3;
      data[i3] = a30 * v0 + a33 * v3;
      data[i1] = b11 * v1 + b12 * v2;
      data[i2] = b21 * v1 + b22 * v2;
    }
    return;
  }
  for (std::size_t i = 0; i < quarter; ++i) {
    const std::size_t b = insert_zero(insert_zero(i, lo), hi);
    const std::size_t idx[4] = {b, b | s1, b | s0, b | s0 | s1};
    const cplx v[4] = {data[idx[0]], data[idx[1]], data[idx[2]], data[idx[3]]};
    for (int r = 0; r < 4; ++r)
      data[idx[r]] = m[r * 4] * v[0] + m[r * 4 + 1] * v[1] + m[r * 4 + 2] * v[2] + m[r * 4 + 3] * v[3];
  }
}

}  // namespace kernels

namespace {

// Operator on m live qubits stored row-major; position 0 is the most
// significant qubit. Row qubit p is flat bit 2m-1-p, column qubit p is bit m-1-p.
class Register {
 public:
  Register(const Matrix& op, std::vector<int> labels) : labels_(std::move(labels)) {
    const std::size_t d = op.rows();
    data_.resize(d * d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) data_[r * d + c] = op(r, c);
  }

  int size() const { return static_cast<int>(labels_.size()); }

  int position(int label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw InvariantError("channel program references a qubit that is not live");
    return static_cast<int>(it - labels_.begin());
  }

  void prepare(int label, const Matrix& rho) {
    if (std::find(labels_.begin(), labels_.end(), label) != labels_.end())
      throw InvariantError("channel program prepares a qubit that is already live");
    const int m = size();
    const std::size_t d = std::size_t{1} << m;
    std::vector<cplx> out(4 * d * d);
    const std::size_t nd = 2 * d;
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        const cplx v = data_[r * d + c];
        if (v == cplx{}) continue;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) out[((r << 1) | a) * nd + ((c << 1) | b)] = v * rho(a, b);
      }
    data_.swap(out);
    labels_.push_back(label);
  }

  void trace_out(int label) {
    const int p = position(label);
    const int m = size();
    const std::size_t d = std::size_t{1} << m;
    const std::size_t nd = d >> 1;
    const int bit = m - 1 - p;  // within a row or column index
    const std::size_t low_mask = (std::size_t{1} << bit) - 1;
    std::vector<cplx> out(nd * nd);
    for (std::size_t r = 0; r < nd; ++r) {
      const std::size_t r0 = ((r >> bit) << (bit + 1)) | (r & low_mask);
      for (std::size_t c = 0; c < nd; ++c) {
        const std::size_t c0 = ((c >> bit) << (bit + 1)) | (c & low_mask);
        const std::size_t s = std::size_t{1} << bit;
        out[r * nd + c] = data_[r0 * d + c0] + data_[(r0 | s) * d + (c0 | s)];
      }
    }
    data_.swap(out);
    labels_.erase(labels_.begin() + p);
  }

  void apply_kraus(const std::vector<int>& labels, const std::vector<Matrix>& kraus) {
    if (kraus.size() == 1) {
      conjugate(data_, labels, kraus[0]);
      return;
    }
    std::vector<cplx> acc(data_.size(), cplx{});
    std::vector<cplx> work;
    for (const auto& k : kraus) {
      work = data_;
      conjugate(work, labels, k);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += work[i];
    }
    data_.swap(acc);
  }

  void transfer(int label, const Matrix& t) {
    const int p = position(label);
    const int m = size();
    cplx s[16];
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) s[r * 4 + c] = t(r, c);
    kernels::apply_2q(data_.data(), 2 * m, 2 * m - 1 - p, m - 1 - p, s);
  }

  void flip_xx(int a, int b, double prob) {
    const int m = size();
    const int pa = position(a), pb = position(b);
    const std::size_t lead = std::size_t{1} << (2 * m - 1 - pa);
    const std::size_t mask = lead | (std::size_t{1} << (2 * m - 1 - pb)) | (std::size_t{1} << (m - 1 - pa)) |
                             (std::size_t{1} << (m - 1 - pb));
    const double keep = 1.0 - prob;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (i & lead) continue;
      const std::size_t j = i ^ mask;
      const cplx x = data_[i], y = data_[j];
      data_[i] = keep * x + prob * y;
      data_[j] = keep * y + prob * x;
    }
  }

  Matrix extract(const std::vector<int>& order) const {
    const int m = size();
    if (static_cast<int>(order.size()) != m) throw InvariantError("channel program leaves extra qubits live");
    std::vector<int> src_pos(m);
    for (int i = 0; i < m; ++i) src_pos[i] = position(order[i]);
    const std::size_t d = std::size_t{1} << m;
    auto remap = [&](std::size_t idx) {
      std::size_t out = 0;
      for (int i = 0; i < m; ++i) out |= ((idx >> (m - 1 - src_pos[i])) & 1) << (m - 1 - i);
      return out;
    };
    std::vector<std::size_t> map(d);
    for (std::size_t i = 0; i < d; ++i) map[i] = remap(i);
    Matrix out(d, d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) out(map[r], map[c]) = data_[r * d + c];
    return out;
  }

 private:
  void conjugate(std::vector<cplx>& data, const std::vector<int>& labels, const Matrix& g) const {
    const int m = size();
    const int total = 2 * m;
    if (labels.size() == 1) {
      const int p = position(labels[0]);
      const cplx u[4] = {g(0, 0), g(0, 1), g(1, 0), g(1, 1)};
      const cplx uc[4] = {std::conj(u[0]), std::conj(u[1]), std::conj(u[2]), std::conj(u[3])};
      kernels::apply_1q(data.data(), total, 2 * m - 1 - p, u);
      kernels::apply_1q(data.data(), total, m - 1 - p, uc);
    } else {
      const int p0 = position(labels[0]), p1 = position(labels[1]);
      cplx u[16], uc[16];
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
          u[r * 4 + c] = g(r, c);
          uc[r * 4 + c] = std::conj(g(r, c));
        }
      kernels::apply_2q(data.data(), total, 2 * m - 1 - p0, 2 * m - 1 - p1, u);
      kernels::apply_2q(data.data(), total, m - 1 - p0, m - 1 - p1, uc);
    }
  }

  std::vector<cplx> data_;
  std::vector<int> labels_;
};

}  // namespace

Matrix single_qubit_transfer(const std::vector<Matrix>& kraus) {
  Matrix t = Matrix::Zero(4, 4);
  for (const auto& k : kraus)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        for (int r0 = 0; r0 < 2; ++r0)
          for (int c0 = 0; c0 < 2; ++c0) t(r * 2 + c, r0 * 2 + c0) += k(r, r0) * std::conj(k(c, c0));
  return t;
}

Matrix run_program(const ChannelProgram& program, const Matrix& op) {
  const Eigen::Index dim = Eigen::Index{1} << program.n_in;
  if (op.rows() != dim || op.cols() != dim) throw std::invalid_argument("operator size does not match channel input width");
  // Input slots mapped to -1 get placeholder labels and are traced first.
  std::vector<int> labels = program.input_labels;
  int placeholder = -1;
  for (int& l : labels)
    if (l < 0) l = placeholder--;
  Register reg(op, labels);
  for (int l = -1; l > placeholder; --l) reg.trace_out(l);
  for (const auto& o : program.ops) {
    switch (o.type) {
      case ProgramOp::Type::Prep: reg.prepare(o.labels.at(0), o.prep); break;
      case ProgramOp::Type::Discard: reg.trace_out(o.labels.at(0)); break;
      case ProgramOp::Type::Kraus: reg.apply_kraus(o.labels, o.kraus); break;
      case ProgramOp::Type::Superop1: reg.transfer(o.labels.at(0), o.prep); break;
      case ProgramOp::Type::FlipXX: reg.flip_xx(o.labels.at(0), o.labels.at(1), o.p); break;
    }
  }
  return reg.extract(program.output_labels);
}

int peak_live_qubits(const ChannelProgram& program) {
  int live = 0;
  for (int l : program.input_labels)
    if (l >= 0) ++live;
  int peak = std::max(live, program.n_in);
  for (const auto& o : program.ops) {
    if (o.type == ProgramOp::Type::Prep) peak = std::max(peak, ++live);
    if (o.type == ProgramOp::Type::Discard) --live;
  }
  return peak;
}

}  // namespace dmera
