// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "autograd/ops.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

namespace autodrag::ag {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

Tape& tape_of(const Var& a) { return *a.tape(); }

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix out = a.value() * b.value();
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g, const Matrix&) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  if (x.cols() != w.rows()) throw ShapeError("linear: input width does not match weight rows");
  if (b.rows() != 1 || b.cols() != w.cols()) throw ShapeError("linear: bias must be 1 x out");
  Matrix out = x.value() * w.value();
  out.rowwise() += b.value().row(0);
  return tape_of(x).record(std::move(out), {x, w, b},
                           [x, w, b](Tape& t, const Matrix& g, const Matrix&) {
                             if (t.requires_grad(x)) t.accumulate(x, g * w.value().transpose());
                             if (t.requires_grad(w)) t.accumulate(w, x.value().transpose() * g);
                             if (t.requires_grad(b)) t.accumulate(b, g.colwise().sum());
                           });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return tape_of(a).record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return tape_of(a).record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) t.accumulate(b, -g);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g, const Matrix&) {
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(const Var& a, double s) {
  return tape_of(a).record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, g * s);
  });
}

Var scale_by(const Var& a, const Var& s) {
  if (s.rows() != 1 || s.cols() != 1) throw ShapeError("scale_by: scale must be 1x1");
  const double sv = s.value()(0, 0);
  return tape_of(a).record(a.value() * sv, {a, s}, [a, s](Tape& t, const Matrix& g, const Matrix&) {
    if (t.requires_grad(a)) t.accumulate(a, g * s.value()(0, 0));
    if (t.requires_grad(s)) {
      Matrix gs(1, 1);
      gs(0, 0) = g.cwiseProduct(a.value()).sum();
      t.accumulate(s, gs);
    }
  });
}

Var batched_left_matmul(const Var& m, const Var& x, int batch) {
  const Eigen::Index r = m.cols();
  if (batch < 1 || x.rows() != r * batch) throw ShapeError("batched_left_matmul: rows do not split into batch blocks");
  const Eigen::Index o = m.rows();
  Matrix out(o * batch, x.cols());
  for (int b = 0; b < batch; ++b) out.middleRows(b * o, o) = m.value() * x.value().middleRows(b * r, r);
  return tape_of(x).record(std::move(out), {m, x}, [m, x, batch, r, o](Tape& t, const Matrix& g, const Matrix&) {
    if (t.requires_grad(m)) {
      Matrix dm = Matrix::Zero(o, r);
      for (int b = 0; b < batch; ++b) dm += g.middleRows(b * o, o) * x.value().middleRows(b * r, r).transpose();
      t.accumulate(m, dm);
    }
    if (t.requires_grad(x)) {
      Matrix dx(x.rows(), x.cols());
      for (int b = 0; b < batch; ++b) dx.middleRows(b * r, r) = m.value().transpose() * g.middleRows(b * o, o);
      t.accumulate(x, dx);
    }
  });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("add_row: row must be 1 x cols");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return tape_of(a).record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, g);
    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var gelu(const Var& x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double kA = 0.044715;
  const Matrix& xv = x.value();
  Matrix out(xv.rows(), xv.cols());
  for (Eigen::Index i = 0; i < xv.size(); ++i) {
    const double v = xv.data()[i];
    out.data()[i] = 0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v)));
  }
  return tape_of(x).record(std::move(out), {x}, [x](Tape& t, const Matrix& g, const Matrix&) {
    const Matrix& xv = x.value();
    Matrix d(xv.rows(), xv.cols());
    for (Eigen::Index i = 0; i < xv.size(); ++i) {
      const double v = xv.data()[i];
      const double th = std::tanh(kC * (v + kA * v * v * v));
      d.data()[i] = g.data()[i] * (0.5 * (1.0 + th) +
                                   0.5 * v * (1.0 - th * th) * kC * (1.0 + 3.0 * kA * v * v));
    }
    t.accumulate(x, d);
  });
}

Var tanh(const Var& x) {
  Matrix out = x.value().array().tanh().matrix();
  return tape_of(x).record(std::move(out), {x}, [x](Tape& t, const Matrix& g, const Matrix& y) {
    t.accumulate(x, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var sigmoid(const Var& x) {
  Matrix out = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  return tape_of(x).record(std::move(out), {x}, [x](Tape& t, const Matrix& g, const Matrix& y) {
    t.accumulate(x, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Eigen::Index n = x.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n) {
    throw ShapeError("layer_norm: gain and bias must be 1 x cols");
  }
  const Matrix& xv = x.value();
  auto xhat = std::make_shared<Matrix>(xv.rows(), n);
  auto inv_std = std::make_shared<Eigen::VectorXd>(xv.rows());
  Matrix out(xv.rows(), n);
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)(r) = is;
    xhat->row(r) = (xv.row(r).array() - mu) * is;
    out.row(r) = xhat->row(r).cwiseProduct(gain.value().row(0)) + bias.value().row(0);
  }
  return tape_of(x).record(
      std::move(out), {x, gain, bias}, [x, gain, bias, xhat, inv_std, n](Tape& t, const Matrix& g, const Matrix&) {
        if (t.requires_grad(gain)) t.accumulate(gain, g.cwiseProduct(*xhat).colwise().sum());
        if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
        if (t.requires_grad(x)) {
          Matrix dx(g.rows(), n);
          for (Eigen::Index r = 0; r < g.rows(); ++r) {
            Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(gain.value().row(0));
            const double m1 = dxhat.mean();
            const double m2 = dxhat.cwiseProduct(xhat->row(r)).mean();
            dx.row(r) = (*inv_std)(r) * (dxhat.array() - m1 - xhat->row(r).array() * m2).matrix();
          }
          t.accumulate(x, dx);
        }
      });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  for (const Var& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape_of(parts[0]).record(std::move(out), inputs, [inputs](Tape& t, const Matrix& g, const Matrix&) {
    Eigen::Index r0 = 0;
    for (const Var& p : inputs) {
      if (t.requires_grad(p)) t.accumulate(p, g.middleRows(r0, p.rows()));
      r0 += p.rows();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts[0].rows();
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape_of(parts[0]).record(std::move(out), inputs, [inputs](Tape& t, const Matrix& g, const Matrix&) {
    Eigen::Index c0 = 0;
    for (const Var& p : inputs) {
      if (t.requires_grad(p)) t.accumulate(p, g.middleCols(c0, p.cols()));
      c0 += p.cols();
    }
  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw ShapeError("slice_rows: out of range");
  Matrix out = a.value().middleRows(start, count);
  return tape_of(a).record(std::move(out), {a}, [a, start, count](Tape& t, const Matrix& g, const Matrix&) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleRows(start, count) = g;
    t.accumulate(a, full);
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ShapeError("slice_cols: out of range");
  Matrix out = a.value().middleCols(start, count);
  return tape_of(a).record(std::move(out), {a}, [a, start, count](Tape& t, const Matrix& g, const Matrix&) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleCols(start, count) = g;
    t.accumulate(a, full);
  });
}

Var reshape(const Var& a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) throw ShapeError("reshape: element count changes");
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  const Eigen::Index ar = a.rows();
  const Eigen::Index ac = a.cols();
  return tape_of(a).record(std::move(out), {a}, [a, ar, ac](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, Eigen::Map<const Matrix>(g.data(), ar, ac));
  });
}

Var gather_rows(const Var& a, std::vector<int> index) {
  const Matrix& av = a.value();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(index.size()), av.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const int src = index[i];
    if (src >= av.rows()) throw ShapeError("gather_rows: index out of range");
    if (src >= 0) out.row(static_cast<Eigen::Index>(i)) = av.row(src);
  }
  return tape_of(a).record(std::move(out), {a},
                           [a, index = std::move(index)](Tape& t, const Matrix& g, const Matrix&) {
                             Matrix da = Matrix::Zero(a.rows(), a.cols());
                             for (std::size_t i = 0; i < index.size(); ++i) {
                               if (index[i] >= 0) da.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
                             }
                             t.accumulate(a, da);
                           });
}

Var gather_taps(const Var& a, std::vector<int> table, int taps) {
  if (taps <= 0 || table.size() % static_cast<std::size_t>(taps) != 0) {
    throw ShapeError("gather_taps: table size is not a multiple of taps");
  }
  const Matrix& av = a.value();
  const Eigen::Index c = av.cols();
  const Eigen::Index rows = static_cast<Eigen::Index>(table.size() / static_cast<std::size_t>(taps));
  Matrix out = Matrix::Zero(rows, c * taps);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int k = 0; k < taps; ++k) {
      const int src = table[static_cast<std::size_t>(r * taps + k)];
      if (src >= av.rows()) throw ShapeError("gather_taps: index out of range");
      if (src >= 0) out.block(r, k * c, 1, c) = av.row(src);
    }
  }
  return tape_of(a).record(
      std::move(out), {a}, [a, table = std::move(table), taps, c, rows](Tape& t, const Matrix& g, const Matrix&) {
        Matrix da = Matrix::Zero(a.rows(), c);
        for (Eigen::Index r = 0; r < rows; ++r) {
          for (int k = 0; k < taps; ++k) {
            const int src = table[static_cast<std::size_t>(r * taps + k)];
            if (src >= 0) da.row(src) += g.block(r, k * c, 1, c);
          }
        }
        t.accumulate(a, da);
      });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return tape_of(a).record(std::move(out), {a}, [a, n](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / n));
  });
}

namespace {

Var l1_reduce(const Var& a, const Var& b, double divisor) {
  require_same_shape(a, b, "l1");
  Matrix out(1, 1);
  out(0, 0) = (a.value() - b.value()).cwiseAbs().sum() / divisor;
  return tape_of(a).record(std::move(out), {a, b}, [a, b, divisor](Tape& t, const Matrix& g, const Matrix&) {
    Matrix s = (a.value() - b.value()).unaryExpr([](double d) {
      return static_cast<double>((d > 0.0) - (d < 0.0));
    });
    s *= g(0, 0) / divisor;
    if (t.requires_grad(a)) t.accumulate(a, s);
    if (t.requires_grad(b)) t.accumulate(b, -s);
  });
}

}  // namespace

Var l1_mean(const Var& a, const Var& b) { return l1_reduce(a, b, static_cast<double>(a.value().size())); }

Var l1_sum(const Var& a, const Var& b) { return l1_reduce(a, b, 1.0); }

Var attention(const Var& q, const Var& k, const Var& v, const Segments& segments, int heads, bool causal) {
  const Eigen::Index width = q.cols();
  if (k.cols() != width || v.cols() != width) throw ShapeError("attention: q, k, v widths differ");
  if (heads <= 0 || width % heads != 0) throw ShapeError("attention: width not divisible by heads");
  const auto& qo = segments.q_offsets;
  const auto& ko = segments.k_offsets;
  if (qo.size() != ko.size() || qo.size() < 2) throw ShapeError("attention: malformed segments");
  if (qo.back() != q.rows() || ko.back() != k.rows() || k.rows() != v.rows()) {
    throw ShapeError("attention: segments do not cover inputs");
  }
  const Eigen::Index dh = width / heads;
  const double scl = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t nseg = qo.size() - 1;

  // Attention probabilities per (segment, head), kept for the backward pass.
  auto probs = std::make_shared<std::vector<Matrix>>(nseg * static_cast<std::size_t>(heads));
  Matrix out = Matrix::Zero(q.rows(), width);
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  for (std::size_t s = 0; s < nseg; ++s) {
    const Eigen::Index q0 = qo[s], nq = qo[s + 1] - qo[s];
    const Eigen::Index k0 = ko[s], nk = ko[s + 1] - ko[s];
    if (nq == 0) continue;
    if (nk == 0) throw ShapeError("attention: empty key segment");
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index c0 = h * dh;
      Matrix scores = qv.block(q0, c0, nq, dh) * kv.block(k0, c0, nk, dh).transpose();
      Matrix& p = (*probs)[s * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h)];
      p = Matrix::Zero(nq, nk);
      for (Eigen::Index r = 0; r < nq; ++r) {
        const Eigen::Index limit = causal ? std::min<Eigen::Index>(r + 1, nk) : nk;
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < limit; ++j) mx = std::max(mx, scores(r, j) * scl);
        double z = 0.0;
        for (Eigen::Index j = 0; j < limit; ++j) {
          const double e = std::exp(scores(r, j) * scl - mx);
          p(r, j) = e;
          z += e;
        }
        for (Eigen::Index j = 0; j < limit; ++j) p(r, j) /= z;
      }
      out.block(q0, c0, nq, dh) = p * vv.block(k0, c0, nk, dh);
    }
  }

  return tape_of(q).record(
      std::move(out), {q, k, v}, [q, k, v, segments, heads, dh, scl, probs](Tape& t, const Matrix& g, const Matrix&) {
        const Matrix& qv = q.value();
        const Matrix& kv = k.value();
        const Matrix& vv = v.value();
        Matrix dq = Matrix::Zero(qv.rows(), qv.cols());
        Matrix dk = Matrix::Zero(kv.rows(), kv.cols());
        Matrix dv = Matrix::Zero(vv.rows(), vv.cols());
        const auto& qo = segments.q_offsets;
        const auto& ko = segments.k_offsets;
        for (std::size_t s = 0; s + 1 < qo.size(); ++s) {
          const Eigen::Index q0 = qo[s], nq = qo[s + 1] - qo[s];
          const Eigen::Index k0 = ko[s], nk = ko[s + 1] - ko[s];
          if (nq == 0) continue;
          for (int h = 0; h < heads; ++h) {
            const Eigen::Index c0 = h * dh;
            const Matrix& p = (*probs)[s * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h)];
            const auto go = g.block(q0, c0, nq, dh);
            Matrix dp = go * vv.block(k0, c0, nk, dh).transpose();
            dv.block(k0, c0, nk, dh) += p.transpose() * go;
            Eigen::VectorXd rowdot = (dp.cwiseProduct(p)).rowwise().sum();
            Matrix ds = p.cwiseProduct(dp.colwise() - rowdot) * scl;
            dq.block(q0, c0, nq, dh) += ds * kv.block(k0, c0, nk, dh);
            dk.block(k0, c0, nk, dh) += ds.transpose() * qv.block(q0, c0, nq, dh);
          }
        }
        t.accumulate(q, dq);
        t.accumulate(k, dk);
        t.accumulate(v, dv);
      });
}

}  // namespace autodrag::ag
