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

// Dense building blocks with hand-written reverse mode. Column t of a
// sequence matrix is the vector at position t.

#ifndef MKGUIDE_SRC_NN_HPP
#define MKGUIDE_SRC_NN_HPP

#include <vector>

#include <Eigen/Dense>

namespace mkguide::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Gate rows are stacked i, f, g, o.
struct LstmWeights {
  const MatrixXd* W;  // 4H x in
  const MatrixXd* U;  // 4H x H
  const MatrixXd* b;  // 4H x 1
};

struct LstmGrads {
  MatrixXd* W;
  MatrixXd* U;
  MatrixXd* b;
};

// Variable-length sequences laid side by side: the columns of sequence k
// are offset[k] .. offset[k] + length[k] - 1.
struct SeqBatch {
  std::vector<Eigen::Index> offset, length;
  std::vector<Eigen::Index> order;  // longest first; slot b runs sequence order[b]
  Eigen::Index total = 0;

  SeqBatch() = default;
  explicit SeqBatch(const std::vector<Eigen::Index>& lengths);
  std::size_t size() const { return length.size(); }
};

struct LstmTape {
  bool reverse = false;
  MatrixXd x;           // in x total
  MatrixXd i, f, g, o;  // H x total, activated gates
  MatrixXd c, h;        // H x total
};

// Runs every sequence over its columns of `x` (right to left when
// `reverse`), all sequences in step; returns the hidden states by column.
MatrixXd lstm_forward(const LstmWeights& w, const SeqBatch& batch, const MatrixXd& x, bool reverse, LstmTape* tape);

// `dh` holds the loss gradient of every hidden state by column. Adds
// parameter gradients and returns the gradient of `x`.
MatrixXd lstm_backward(const LstmWeights& w, const SeqBatch& batch, const LstmTape& tape, const MatrixXd& dh,
                       const LstmGrads& g);

struct MlpTape {
  MatrixXd x, a;  // inputs and pre-activations, one column per item
};

// W2 * relu(W1 x + b1) + b2 with a 1-row W2, for every column of `x`.
VectorXd mlp_forward(const MatrixXd& W1, const MatrixXd& b1, const MatrixXd& W2, const MatrixXd& b2, const MatrixXd& x,
                     MlpTape* tape);

// Returns the gradient of `x`.
MatrixXd mlp_backward(const MatrixXd& W1, const MatrixXd& W2, const MlpTape& tape, const VectorXd& dy, MatrixXd& dW1,
                      MatrixXd& db1, MatrixXd& dW2, MatrixXd& db2);

}  // namespace mkguide::nn

#endif  // MKGUIDE_SRC_NN_HPP
