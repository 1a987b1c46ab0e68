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

#ifndef MKGUIDE_GUIDANCE_HPP
#define MKGUIDE_GUIDANCE_HPP

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "mkguide/problem.hpp"
#include "mkguide/relations.hpp"
#include "mkguide/search.hpp"
#include "mkguide/tree.hpp"

namespace mkguide {

// ---------------------------------------------------------------------------
// Tokens.

/// Closed vocabulary: ( ) . LVAR, every atom and structural head, and the
/// relation names. Ids are positions in this list.
const std::vector<std::string>& vocabulary();
inline constexpr int kMaxTokens = 512;

class UnknownToken : public std::runtime_error {
 public:
  explicit UnknownToken(const std::string& token)
      : std::runtime_error("unknown token '" + token + "'"), token_(token) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

int token_id(std::string_view token);  // throws UnknownToken

/// Printed form of `t` as tokens; every variable is LVAR.
std::vector<int> tokenize_term(const Term& t);

/// (REL ARG...) with the arguments walked under `state`. Streams longer
/// than kMaxTokens keep their last kMaxTokens tokens.
std::vector<int> tokenize(const Call& call, const Substitution& state);
std::vector<int> tokenize(Relation relation, const std::vector<Term>& args);

std::vector<std::string> token_strings(const std::vector<int>& ids);

/// Streams cut to kMaxTokens so far (process-wide).
std::uint64_t truncated_streams();

// ---------------------------------------------------------------------------
// Candidate structure.

struct ConstraintLeaf {
  Relation relation = Relation::kEvalo;
  std::vector<int> tokens;
};

/// Pooling tree of one candidate; node 0 is the root.
struct PoolNode {
  NodeKind kind = NodeKind::kDone;  // kSuspend is a leaf
  int leaf = -1;                    // index into CandidateSet::leaves
  std::vector<int> children;
};

/// Everything a model needs to score the candidates of one decision.
struct CandidateSet {
  std::vector<ConstraintLeaf> leaves;  // distinct streams
  std::vector<std::vector<PoolNode>> candidates;
  std::vector<std::vector<int>> programs;  // partial program tokens per candidate
  std::vector<std::pair<std::vector<int>, std::vector<int>>> examples;  // input, output tokens
  std::unordered_map<std::string, int> leaf_index;  // leaf key -> position in leaves

  std::size_t size() const { return candidates.size(); }
  bool finished(std::size_t i) const { return candidates[i][0].kind == NodeKind::kDone; }
};

/// Appends the pooling tree of `node` (null for a finished branch).
void add_candidate(CandidateSet& set, const NodePtr& node, const Term& partial_program);
void set_examples(CandidateSet& set, const Problem& problem);
CandidateSet candidate_set(const SearchView& view, const Problem& problem);
CandidateSet candidate_set(const ConstraintTree& tree, const Problem& problem);

inline constexpr double kDoneScore = std::numeric_limits<double>::infinity();

/// Max over Disj, mean over Conj, leaf score at Suspend, +inf for Done.
double pool(const std::vector<PoolNode>& nodes, const std::vector<double>& leaf_scores, int at = 0);

// ---------------------------------------------------------------------------
// Choice.

enum class ChoiceMode { kTest, kTrain };

/// Softmax at temperature 1. Infinite scores take all the mass, shared
/// evenly.
std::vector<double> softmax(const std::vector<double>& scores);

/// Test: argmax, lowest index on ties. Train: a draw from softmax(scores).
std::size_t choose_candidate(const std::vector<double>& scores, ChoiceMode mode, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Model.

struct GuidanceConfig {
  int embed = 128;
  int hidden = 128;
  bool baseline = false;  // shared encoder over input, output and program
};

struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gradients aligned with GuidanceModel::parameters().
using Gradients = std::vector<Eigen::MatrixXd>;

class GuidanceModel {
 public:
  /// Fresh weights: uniform in [-0.08, 0.08], LSTM biases 0 except the
  /// forget gate at 1, scorer biases 0.
  static GuidanceModel create(const GuidanceConfig& config, std::uint64_t seed);

  const GuidanceConfig& config() const { return config_; }
  bool baseline() const { return config_.baseline; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  Gradients zero_gradients() const;

  /// Final forward and backward states of the top layer (2 * hidden).
  Eigen::VectorXd embed_constraint(const std::vector<int>& tokens, Relation relation) const;
  double score_constraint(const std::vector<int>& tokens, Relation relation) const;
  /// score_constraint of every leaf, computed as one batch.
  std::vector<double> score_constraints(const std::vector<const ConstraintLeaf*>& leaves) const;

  /// Baseline model only; one example.
  double baseline_score(const Term& input, const Term& output, const Term& partial_program) const;

  /// Pooled score per candidate (guidance) or averaged example score
  /// (baseline). Finished candidates score +inf.
  std::vector<double> score(const CandidateSet& set) const;

  /// -log softmax(score(set))[target]. With `grads`, adds the gradient.
  /// Finished candidates other than the target are left out of the softmax;
  /// a finished target costs nothing.
  double loss(const CandidateSet& set, std::size_t target, Gradients* grads = nullptr) const;

  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static GuidanceModel load(std::istream& in);
  static GuidanceModel load(const std::string& path);

  friend bool operator==(const GuidanceModel& a, const GuidanceModel& b);

 private:
  struct Lstm {
    int W, U, b;
  };
  struct Encoder {
    Lstm cell[2][2];  // layer, direction
  };
  struct MlpTape;
  struct EncoderTape;

  GuidanceModel() = default;
  void build(const GuidanceConfig& config);
  int add(const std::string& name, int rows, int cols);
  int index_of(const std::string& name) const;
  const Encoder& encoder_for(Relation r) const;
  // One column per token stream.
  Eigen::MatrixXd encode(const Encoder& enc, const std::vector<const std::vector<int>*>& streams,
                         EncoderTape* tape) const;
  void encode_backward(const Encoder& enc, const EncoderTape& tape, const Eigen::MatrixXd& dout,
                       Gradients& grads) const;
  // Leaves grouped by relation; `tapes` holds one tape per relation.
  Eigen::MatrixXd embed_leaves(const std::vector<const ConstraintLeaf*>& leaves, std::vector<EncoderTape>* tapes) const;
  void embed_leaves_backward(const std::vector<const ConstraintLeaf*>& leaves, std::vector<EncoderTape>& tapes,
                             const Eigen::MatrixXd& dout, Gradients& grads) const;
  Eigen::VectorXd mlp(const Eigen::MatrixXd& x, MlpTape* tape) const;
  Eigen::MatrixXd mlp_backward(const MlpTape& tape, const Eigen::VectorXd& dy, Gradients& grads) const;
  double guided_loss(const CandidateSet& set, std::size_t target, Gradients* grads) const;
  double baseline_loss(const CandidateSet& set, std::size_t target, Gradients* grads) const;

  GuidanceConfig config_;
  std::vector<Parameter> params_;
  std::unordered_map<std::string, int> by_name_;
  std::vector<int> embedding_;  // token id -> parameter
  std::vector<Encoder> encoders_;
  int W1_ = -1, b1_ = -1, W2_ = -1, b2_ = -1;
};

// ---------------------------------------------------------------------------
// Policies.

/// Greedy (test) or sampling (train) choice by a model's candidate scores.
/// Leaf scores and per-branch pooled scores are cached for the duration of a
/// search; the model must not change while the policy is in use.
class GuidedPolicy : public Policy {
 public:
  explicit GuidedPolicy(const GuidanceModel& model, ChoiceMode mode = ChoiceMode::kTest, std::uint64_t seed = 0);

  void begin(const Problem& problem) override;
  std::vector<std::size_t> choose(const SearchView& view, std::size_t count) override;
  std::string name() const override { return model_.baseline() ? "baseline" : "guided"; }

  /// Scores of the candidates in `view`, best effort cached.
  std::vector<double> scores(const SearchView& view);

 private:
  const GuidanceModel& model_;
  ChoiceMode mode_;
  std::mt19937_64 rng_;
  Problem problem_;
  std::unordered_map<std::string, double> leaf_cache_;
  std::unordered_map<std::uint64_t, std::pair<NodePtr, double>> branch_cache_;
};

}  // namespace mkguide

#endif  // MKGUIDE_GUIDANCE_HPP
