/* Copyright 2026 The mkguide Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mkguide::nn {

namespace {

template <typename In>
auto sigmoid(const In& z) {
  return (1.0 + (-z.array()).exp()).inverse();
}

// Column of sequence k at its s-th step.
Eigen::Index column(const SeqBatch& b, std::size_t k, Eigen::Index s, bool reverse) {
  return b.offset[k] + (reverse ? b.length[k] - 1 - s : s);
}

}  // namespace

SeqBatch::SeqBatch(const std::vector<Eigen::Index>& lengths) : length(lengths) {
  for (Eigen::Index n : lengths) {
    if (n < 1) throw std::invalid_argument("empty sequence in batch");
    offset.push_back(total);
    total += n;
  }
  order.resize(lengths.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return length[a] > length[b]; });
}

MatrixXd lstm_forward(const LstmWeights& w, const SeqBatch& batch, const MatrixXd& x, bool reverse, LstmTape* tape) {
  const Eigen::Index H = w.U->cols();
  const auto N = static_cast<Eigen::Index>(batch.size());
  LstmTape local;
  LstmTape& tp = tape != nullptr ? *tape : local;
  tp.reverse = reverse;
  if (tape != nullptr) tp.x = x;
  for (MatrixXd* m : {&tp.i, &tp.f, &tp.g, &tp.o, &tp.c, &tp.h}) m->resize(H, batch.total);
  if (N == 0) return tp.h;
  // Input projections for all columns at once.
  MatrixXd zx = (*w.W) * x;
  zx.colwise() += w.b->col(0);
  MatrixXd hs = MatrixXd::Zero(H, N);
  MatrixXd cs = MatrixXd::Zero(H, N);
  MatrixXd z(4 * H, N);
  Eigen::Index active = N;
  const Eigen::Index steps = batch.length[static_cast<std::size_t>(batch.order[0])];
  for (Eigen::Index s = 0; s < steps; ++s) {
    while (batch.length[static_cast<std::size_t>(batch.order[static_cast<std::size_t>(active - 1)])] <= s) --active;
    for (Eigen::Index b = 0; b < active; ++b) {
      z.col(b) = zx.col(column(batch, static_cast<std::size_t>(batch.order[static_cast<std::size_t>(b)]), s, reverse));
    }
    auto zb = z.leftCols(active);
    zb.noalias() += (*w.U) * hs.leftCols(active);
    auto ig = sigmoid(zb.topRows(H)).eval();
    auto fg = sigmoid(zb.middleRows(H, H)).eval();
    auto gg = zb.middleRows(2 * H, H).array().tanh().eval();
    auto og = sigmoid(zb.bottomRows(H)).eval();
    cs.leftCols(active).array() = fg * cs.leftCols(active).array() + ig * gg;
    hs.leftCols(active).array() = og * cs.leftCols(active).array().tanh();
    for (Eigen::Index b = 0; b < active; ++b) {
      const Eigen::Index t = column(batch, static_cast<std::size_t>(batch.order[static_cast<std::size_t>(b)]), s, reverse);
      tp.i.col(t) = ig.col(b);
      tp.f.col(t) = fg.col(b);
      tp.g.col(t) = gg.col(b);
      tp.o.col(t) = og.col(b);
      tp.c.col(t) = cs.col(b);
      tp.h.col(t) = hs.col(b);
    }
  }
  return tp.h;
}

MatrixXd lstm_backward(const LstmWeights& w, const SeqBatch& batch, const LstmTape& tape, const MatrixXd& dh,
                       const LstmGrads& g) {
  const Eigen::Index H = w.U->cols();
  const auto N = static_cast<Eigen::Index>(batch.size());
  MatrixXd dz(4 * H, batch.total);
  // Hidden state feeding each column's step; zero at a sequence's first step.
  MatrixXd h_prev = MatrixXd::Zero(H, batch.total);
  MatrixXd dh_next = MatrixXd::Zero(H, N);
  MatrixXd dc_next = MatrixXd::Zero(H, N);
  Eigen::ArrayXXd i(H, N), f(H, N), gg(H, N), o(H, N), c(H, N), c_prev(H, N), dht(H, N);
  MatrixXd dzb(4 * H, N);
  const Eigen::Index steps = N == 0 ? 0 : batch.length[static_cast<std::size_t>(batch.order[0])];
  Eigen::Index active = 0;
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    while (active < N && batch.length[static_cast<std::size_t>(batch.order[static_cast<std::size_t>(active)])] > s) {
      ++active;
    }
    for (Eigen::Index b = 0; b < active; ++b) {
      const auto k = static_cast<std::size_t>(batch.order[static_cast<std::size_t>(b)]);
      const Eigen::Index t = column(batch, k, s, tape.reverse);
      i.col(b) = tape.i.col(t).array();
      f.col(b) = tape.f.col(t).array();
      gg.col(b) = tape.g.col(t).array();
      o.col(b) = tape.o.col(t).array();
      c.col(b) = tape.c.col(t).array();
      dht.col(b) = dh.col(t).array() + dh_next.col(b).array();
      if (s > 0) {
        const Eigen::Index p = column(batch, k, s - 1, tape.reverse);
        c_prev.col(b) = tape.c.col(p).array();
        h_prev.col(t) = tape.h.col(p);
      } else {
        c_prev.col(b).setZero();
      }
    }
    auto lc = [&](Eigen::ArrayXXd& a) { return a.leftCols(active); };
    const Eigen::ArrayXXd tc = lc(c).tanh();
    const Eigen::ArrayXXd dc = dc_next.leftCols(active).array() + lc(dht) * lc(o) * (1.0 - tc.square());
    auto d = dzb.leftCols(active);
    d.topRows(H) = (dc * lc(gg) * lc(i) * (1.0 - lc(i))).matrix();
    d.middleRows(H, H) = (dc * lc(c_prev) * lc(f) * (1.0 - lc(f))).matrix();
    d.middleRows(2 * H, H) = (dc * lc(i) * (1.0 - lc(gg).square())).matrix();
    d.bottomRows(H) = (lc(dht) * tc * lc(o) * (1.0 - lc(o))).matrix();
    dc_next.leftCols(active) = (dc * lc(f)).matrix();
    dh_next.leftCols(active).noalias() = w.U->transpose() * d;
    for (Eigen::Index b = 0; b < active; ++b) {
      dz.col(column(batch, static_cast<std::size_t>(batch.order[static_cast<std::size_t>(b)]), s, tape.reverse)) =
          dzb.col(b);
    }
  }
  g.U->noalias() += dz * h_prev.transpose();
  g.W->noalias() += dz * tape.x.transpose();
  g.b->col(0) += dz.rowwise().sum();
  return w.W->transpose() * dz;
}

VectorXd mlp_forward(const MatrixXd& W1, const MatrixXd& b1, const MatrixXd& W2, const MatrixXd& b2, const MatrixXd& x,
                     MlpTape* tape) {
  MatrixXd a = W1 * x;
  a.colwise() += b1.col(0);
  VectorXd y = (W2 * a.cwiseMax(0.0)).transpose();
  y.array() += b2(0, 0);
  if (tape != nullptr) {
    tape->x = x;
    tape->a = std::move(a);
  }
  return y;
}

MatrixXd mlp_backward(const MatrixXd& W1, const MatrixXd& W2, const MlpTape& tape, const VectorXd& dy, MatrixXd& dW1,
                      MatrixXd& db1, MatrixXd& dW2, MatrixXd& db2) {
  dW2.noalias() += dy.transpose() * tape.a.cwiseMax(0.0).transpose();
  db2(0, 0) += dy.sum();
  MatrixXd da = (W2.transpose() * dy.transpose()).cwiseProduct((tape.a.array() > 0.0).cast<double>().matrix());
  dW1.noalias() += da * tape.x.transpose();
  db1.col(0) += da.rowwise().sum();
  return W1.transpose() * da;
}

}  // namespace mkguide::nn
