#include "nwsd/tape.hpp"

#include <cmath>
#include <utility>

namespace nwsd {

namespace {
constexpr double kLogFloor = 1e-12;
}

Tape::Var Tape::push(Matrix value, std::function<void(Tape&)> pull) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(pull)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw StateError("tape: variable does not belong to this tape");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw StateError("tape: variable does not belong to this tape");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Tape::Var Tape::leaf(Matrix value) { return push(std::move(value), nullptr); }

const Matrix& Tape::value(Var v) const { return node(v).value; }

const Matrix& Tape::grad(Var v) const {
  if (!backward_done_) throw StateError("tape: grad queried before backward");
  return node(v).grad;
}

Tape::Var Tape::conv1d(Var input, Var kernel, Var bias) {
  const Matrix& x = node(input).value;
  const Matrix& k = node(kernel).value;
  const Matrix& b = node(bias).value;
  const int len = x.rows;
  const int din = x.cols;
  const int d = k.cols;
  if (len < 1) throw ShapeError("conv1d: input must have at least one row");
  if (k.rows != 3 * din) throw ShapeError("conv1d: kernel rows must equal 3*Din");
  if (b.rows != 1 || b.cols != d) throw ShapeError("conv1d: bias must be 1 x d");

  Matrix out(len, d);
  for (int t = 0; t < len; ++t) {
    for (int j = 0; j < d; ++j) out.at(t, j) = b.at(0, j);
    for (int tap = 0; tap < 3; ++tap) {
      const int src = t + tap - 1;  // zero padding outside [0, len)
      if (src < 0 || src >= len) continue;
      for (int i = 0; i < din; ++i) {
        const double xv = x.at(src, i);
        if (xv == 0.0) continue;
        const int kr = tap * din + i;
        for (int j = 0; j < d; ++j) out.at(t, j) += xv * k.at(kr, j);
      }
    }
    for (int j = 0; j < d; ++j)
      if (out.at(t, j) < 0.0) out.at(t, j) = 0.0;
  }

  const int xi = input.id, ki = kernel.id, bi = bias.id;
  // Ops push the node first, then attach the pull closure: the closure
  // captures node ids, never references, so nodes_ may reallocate freely.
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull = [xi, ki, bi, oi](Tape& t) {
    const Matrix& x = t.nodes_[xi].value;
    const Matrix& k = t.nodes_[ki].value;
    const Matrix& y = t.nodes_[oi].value;
    const Matrix& gy = t.nodes_[oi].grad;
    Matrix& gx = t.nodes_[xi].grad;
    Matrix& gk = t.nodes_[ki].grad;
    Matrix& gb = t.nodes_[bi].grad;
    const int len = x.rows, din = x.cols, d = k.cols;
    for (int t2 = 0; t2 < len; ++t2) {
      for (int j = 0; j < d; ++j) {
        if (y.at(t2, j) <= 0.0) continue;  // ReLU subgradient
        const double g = gy.at(t2, j);
        if (g == 0.0) continue;
        gb.at(0, j) += g;
        for (int tap = 0; tap < 3; ++tap) {
          const int src = t2 + tap - 1;
          if (src < 0 || src >= len) continue;
          for (int i = 0; i < din; ++i) {
            const int kr = tap * din + i;
            gk.at(kr, j) += x.at(src, i) * g;
            gx.at(src, i) += k.at(kr, j) * g;
          }
        }
      }
    }
  };
  return outv;
}

Tape::Var Tape::matmul(Var a, Var b) {
  const Matrix& ma = node(a).value;
  const Matrix& mb = node(b).value;
  Matrix out = nwsd::matmul(ma, mb);
  const int ai = a.id, bi = b.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull = [ai, bi, oi](Tape& t) {
    const Matrix& ma = t.nodes_[ai].value;
    const Matrix& mb = t.nodes_[bi].value;
    const Matrix& gy = t.nodes_[oi].grad;
    Matrix& ga = t.nodes_[ai].grad;
    Matrix& gb = t.nodes_[bi].grad;
    // ga += gy * mb^T ; gb += ma^T * gy
    for (int i = 0; i < ma.rows; ++i)
      for (int j = 0; j < mb.cols; ++j) {
        const double g = gy.at(i, j);
        if (g == 0.0) continue;
        for (int k = 0; k < ma.cols; ++k) {
          ga.at(i, k) += g * mb.at(k, j);
          gb.at(k, j) += ma.at(i, k) * g;
        }
      }
  };
  return outv;
}

Tape::Var Tape::transpose(Var x) {
  Matrix out = transposed(node(x).value);
  const int xi = x.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull = [xi, oi](Tape& t) {
    const Matrix& gy = t.nodes_[oi].grad;
    Matrix& gx = t.nodes_[xi].grad;
    for (int i = 0; i < gy.rows; ++i)
      for (int j = 0; j < gy.cols; ++j) gx.at(j, i) += gy.at(i, j);
  };
  return outv;
}

Tape::Var Tape::sigmoid(Var x) {
  const Matrix& mx = node(x).value;
  Matrix out(mx.rows, mx.cols);
  for (std::size_t i = 0; i < mx.size(); ++i) out.data[i] = nwsd::sigmoid(mx.data[i]);
  const int xi = x.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull = [xi, oi](Tape& t) {
    const Matrix& y = t.nodes_[oi].value;
    const Matrix& gy = t.nodes_[oi].grad;
    Matrix& gx = t.nodes_[xi].grad;
    for (std::size_t i = 0; i < y.size(); ++i)
      gx.data[i] += gy.data[i] * y.data[i] * (1.0 - y.data[i]);
  };
  return outv;
}

Tape::Var Tape::softmax_rows(Var x) {
  const Matrix& mx = node(x).value;
  if (mx.cols < 1) throw ShapeError("softmax_rows: empty rows");
  Matrix out(mx.rows, mx.cols);
  for (int r = 0; r < mx.rows; ++r) {
    double mx_val = mx.at(r, 0);
    for (int c = 1; c < mx.cols; ++c) mx_val = std::max(mx_val, mx.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < mx.cols; ++c) {
      const double e = std::exp(mx.at(r, c) - mx_val);
      out.at(r, c) = e;
      sum += e;
    }
    for (int c = 0; c < mx.cols; ++c) out.at(r, c) /= sum;
  }
  const int xi = x.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull = [xi, oi](Tape& t) {
    const Matrix& y = t.nodes_[oi].value;
    const Matrix& gy = t.nodes_[oi].grad;
    Matrix& gx = t.nodes_[xi].grad;
    for (int r = 0; r < y.rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < y.cols; ++c) dot += gy.at(r, c) * y.at(r, c);
      for (int c = 0; c < y.cols; ++c)
        gx.at(r, c) += y.at(r, c) * (gy.at(r, c) - dot);
    }
  };
  return outv;
}

Tape::Var Tape::select_row(Var x, int r) {
  const Matrix& mx = node(x).value;
  if (r < 0 || r >= mx.rows) throw ShapeError("select_row: row index out of range");
  Matrix out = mx.row(r);
  const int xi = x.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull = [xi, oi, r](Tape& t) {
    const Matrix& gy = t.nodes_[oi].grad;
    Matrix& gx = t.nodes_[xi].grad;
    for (int c = 0; c < gy.cols; ++c) gx.at(r, c) += gy.at(0, c);
  };
  return outv;
}

Tape::Var Tape::sum_all(Var x) {
  const Matrix& mx = node(x).value;
  double s = 0.0;
  for (double v : mx.data) s += v;
  Matrix out(1, 1);
  out.at(0, 0) = s;
  const int xi = x.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull = [xi, oi](Tape& t) {
    const double g = t.nodes_[oi].grad.at(0, 0);
    Matrix& gx = t.nodes_[xi].grad;
    for (double& v : gx.data) v += g;
  };
  return outv;
}

Tape::Var Tape::div_by_scalar(Var x, Var s, double eps) {
  const Matrix& mx = node(x).value;
  const Matrix& ms = node(s).value;
  if (ms.rows != 1 || ms.cols != 1) throw ShapeError("div_by_scalar: s must be 1 x 1");
  const double inv = 1.0 / (ms.at(0, 0) + eps);
  Matrix out(mx.rows, mx.cols);
  for (std::size_t i = 0; i < mx.size(); ++i) out.data[i] = mx.data[i] * inv;
  const int xi = x.id, si = s.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull = [xi, si, oi, inv](Tape& t) {
    const Matrix& mx = t.nodes_[xi].value;
    const Matrix& gy = t.nodes_[oi].grad;
    Matrix& gx = t.nodes_[xi].grad;
    Matrix& gs = t.nodes_[si].grad;
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      gx.data[i] += gy.data[i] * inv;
      acc += gy.data[i] * mx.data[i];
    }
    gs.at(0, 0) += -acc * inv * inv;
  };
  return outv;
}

Tape::Var Tape::dropout(Var x, const std::vector<std::uint8_t>& keep, double keep_prob) {
  const Matrix& mx = node(x).value;
  if (keep.size() != mx.size()) throw ShapeError("dropout: mask size mismatch");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0))
    throw ConfigError("dropout: keep probability must be in (0, 1]");
  const double scale = 1.0 / keep_prob;
  Matrix out(mx.rows, mx.cols);
  for (std::size_t i = 0; i < mx.size(); ++i)
    out.data[i] = keep[i] ? mx.data[i] * scale : 0.0;
  const int xi = x.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  std::vector<std::uint8_t> mask = keep;
  nodes_[static_cast<std::size_t>(oi)].pull =
      [xi, oi, scale, mask = std::move(mask)](Tape& t) {
        const Matrix& gy = t.nodes_[oi].grad;
        Matrix& gx = t.nodes_[xi].grad;
        for (std::size_t i = 0; i < gy.size(); ++i)
          if (mask[i]) gx.data[i] += gy.data[i] * scale;
      };
  return outv;
}

Tape::Var Tape::add(Var a, Var b) {
  const Matrix& ma = node(a).value;
  const Matrix& mb = node(b).value;
  if (!ma.same_shape(mb)) throw ShapeError("add: shape mismatch");
  Matrix out(ma.rows, ma.cols);
  for (std::size_t i = 0; i < ma.size(); ++i) out.data[i] = ma.data[i] + mb.data[i];
  const int ai = a.id, bi = b.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull = [ai, bi, oi](Tape& t) {
    const Matrix& gy = t.nodes_[oi].grad;
    Matrix& ga = t.nodes_[ai].grad;
    Matrix& gb = t.nodes_[bi].grad;
    for (std::size_t i = 0; i < gy.size(); ++i) {
      ga.data[i] += gy.data[i];
      gb.data[i] += gy.data[i];
    }
  };
  return outv;
}

Tape::Var Tape::neg_log_prob(Var p, int target) {
  const Matrix& mp = node(p).value;
  if (mp.rows != 1) throw ShapeError("neg_log_prob: p must be a single row");
  if (target < 0 || target >= mp.cols)
    throw ShapeError("neg_log_prob: target class out of range");
  Matrix out(1, 1);
  out.at(0, 0) = -std::log(std::max(mp.at(0, target), kLogFloor));
  const int pi = p.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull = [pi, oi, target](Tape& t) {
    const Matrix& mp = t.nodes_[pi].value;
    const double g = t.nodes_[oi].grad.at(0, 0);
    if (mp.at(0, target) > kLogFloor)
      t.nodes_[pi].grad.at(0, target) += -g / mp.at(0, target);
  };
  return outv;
}

Tape::Var Tape::mean_neg_log_rows(Var p, std::vector<int> targets) {
  const Matrix& mp = node(p).value;
  if (static_cast<int>(targets.size()) != mp.rows)
    throw ShapeError("mean_neg_log_rows: one target per row required");
  double acc = 0.0;
  for (int r = 0; r < mp.rows; ++r) {
    const int c = targets[static_cast<std::size_t>(r)];
    if (c < 0 || c >= mp.cols)
      throw ShapeError("mean_neg_log_rows: target class out of range");
    acc += -std::log(std::max(mp.at(r, c), kLogFloor));
  }
  Matrix out(1, 1);
  out.at(0, 0) = acc / mp.rows;
  const int pi = p.id;
  Var outv = push(std::move(out), nullptr);
  const int oi = outv.id;
  nodes_[static_cast<std::size_t>(oi)].pull =
      [pi, oi, targets = std::move(targets)](Tape& t) {
        const Matrix& mp = t.nodes_[pi].value;
        const double g = t.nodes_[oi].grad.at(0, 0) / mp.rows;
        for (int r = 0; r < mp.rows; ++r) {
          const int c = targets[static_cast<std::size_t>(r)];
          if (mp.at(r, c) > kLogFloor)
            t.nodes_[pi].grad.at(r, c) += -g / mp.at(r, c);
        }
      };
  return outv;
}

void Tape::backward(Var loss, double seed) {
  if (nodes_.empty()) throw StateError("tape: backward before any forward op");
  if (backward_done_) throw StateError("tape: backward already ran on this tape");
  Node& ln = node(loss);
  if (ln.value.rows != 1 || ln.value.cols != 1)
    throw ShapeError("tape: backward expects a scalar loss");
  for (Node& n : nodes_) n.grad = Matrix(n.value.rows, n.value.cols);
  ln.grad.at(0, 0) = seed;
  backward_done_ = true;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->pull) it->pull(*this);
  }
}

}  // namespace nwsd
