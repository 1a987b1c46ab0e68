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

#include "mkguide/guidance.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nn.hpp"

namespace mkguide {

namespace {

constexpr int kPunctCount = 4;  // ( ) . LVAR
enum : int { kOpen = 0, kClose = 1, kDot = 2, kLvar = 3 };

std::atomic<std::uint64_t> g_truncated{0};

int symbol_token(Symbol s) { return kPunctCount + static_cast<int>(s); }
int relation_token(Relation r) { return kPunctCount + kSymbolCount + static_cast<int>(r); }

void emit(const Term& t, std::vector<int>& out) {
  if (t.is_var()) {
    out.push_back(kLvar);
    return;
  }
  if (t.is_atom()) {
    out.push_back(symbol_token(t.symbol()));
    return;
  }
  out.push_back(kOpen);
  emit(t.left(), out);
  const Term* rest = &t.right();
  while (rest->is_pair()) {
    emit(rest->left(), out);
    rest = &rest->right();
  }
  if (!rest->is_nil()) {
    out.push_back(kDot);
    emit(*rest, out);
  }
  out.push_back(kClose);
}

void cap(std::vector<int>& tokens) {
  if (tokens.size() <= static_cast<std::size_t>(kMaxTokens)) return;
  tokens.erase(tokens.begin(), tokens.end() - kMaxTokens);
  g_truncated.fetch_add(1, std::memory_order_relaxed);
}

std::string leaf_key(Relation r, const std::vector<int>& tokens) {
  std::string key(1, static_cast<char>(r));
  for (int t : tokens) key.push_back(static_cast<char>(t));
  return key;
}

int build_pool(CandidateSet& set, std::vector<PoolNode>& nodes, const NodePtr& n) {
  const int at = static_cast<int>(nodes.size());
  nodes.push_back(PoolNode{n->kind, -1, {}});
  switch (n->kind) {
    case NodeKind::kSuspend: {
      ConstraintLeaf leaf{n->call.relation, tokenize(n->call, n->state)};
      std::string key = leaf_key(leaf.relation, leaf.tokens);
      auto [it, fresh] = set.leaf_index.try_emplace(std::move(key), static_cast<int>(set.leaves.size()));
      if (fresh) set.leaves.push_back(std::move(leaf));
      nodes[at].leaf = it->second;
      break;
    }
    case NodeKind::kConj:
    case NodeKind::kDisj:
      for (const NodePtr& c : n->children) {
        int child = build_pool(set, nodes, c);
        nodes[at].children.push_back(child);
      }
      break;
    case NodeKind::kDone:
    case NodeKind::kFail:
      break;
  }
  return at;
}

void pool_backward(const std::vector<PoolNode>& nodes, const std::vector<double>& leaf_scores, int at, double d,
                   std::vector<double>& dleaf) {
  const PoolNode& n = nodes[at];
  switch (n.kind) {
    case NodeKind::kSuspend:
      dleaf[n.leaf] += d;
      return;
    case NodeKind::kConj:
      for (int c : n.children) pool_backward(nodes, leaf_scores, c, d / static_cast<double>(n.children.size()), dleaf);
      return;
    case NodeKind::kDisj: {
      // Subgradient to the first maximal child.
      int best = -1;
      double best_score = 0;
      for (int c : n.children) {
        double s = pool(nodes, leaf_scores, c);
        if (best < 0 || s > best_score) {
          best = c;
          best_score = s;
        }
      }
      if (best >= 0) pool_backward(nodes, leaf_scores, best, d, dleaf);
      return;
    }
    default:
      return;
  }
}

// Cross-entropy over the candidates that have finite scores (plus the
// target). Writes dloss/dscore into `dscores`.
double cross_entropy(const std::vector<double>& scores, std::size_t target, std::vector<double>& dscores) {
  dscores.assign(scores.size(), 0.0);
  if (std::isinf(scores[target]) && scores[target] > 0) return 0.0;
  double m = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (std::isfinite(s)) m = std::max(m, s);
  }
  double z = 0;
  for (double s : scores) {
    if (std::isfinite(s)) z += std::exp(s - m);
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isfinite(scores[i])) dscores[i] = std::exp(scores[i] - m) / z;
  }
  dscores[target] -= 1.0;
  return -(scores[target] - m - std::log(z));
}

}  // namespace

// ---------------------------------------------------------------------------
// Tokens.

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> vocab = [] {
    std::vector<std::string> v{"(", ")", ".", "LVAR"};
    for (int i = 0; i < kSymbolCount; ++i) v.emplace_back(symbol_name(static_cast<Symbol>(i)));
    for (int i = 0; i < kRelationCount; ++i) v.emplace_back(relation_name(static_cast<Relation>(i)));
    return v;
  }();
  return vocab;
}

int token_id(std::string_view token) {
  const auto& v = vocabulary();
  auto it = std::find(v.begin(), v.end(), token);
  if (it == v.end()) throw UnknownToken(std::string(token));
  return static_cast<int>(it - v.begin());
}

std::vector<int> tokenize_term(const Term& t) {
  std::vector<int> out;
  emit(t, out);
  cap(out);
  return out;
}

std::vector<int> tokenize(Relation relation, const std::vector<Term>& args) {
  std::vector<int> out{kOpen, relation_token(relation)};
  for (const Term& a : args) emit(a, out);
  out.push_back(kClose);
  cap(out);
  return out;
}

std::vector<int> tokenize(const Call& call, const Substitution& state) {
  std::vector<Term> args;
  for (const Term& a : call.args) args.push_back(walk_star(a, state));
  return tokenize(call.relation, args);
}

std::vector<std::string> token_strings(const std::vector<int>& ids) {
  std::vector<std::string> out;
  for (int id : ids) out.push_back(vocabulary().at(static_cast<std::size_t>(id)));
  return out;
}

std::uint64_t truncated_streams() { return g_truncated.load(std::memory_order_relaxed); }

// ---------------------------------------------------------------------------
// Candidate sets and pooling.

void add_candidate(CandidateSet& set, const NodePtr& node, const Term& partial_program) {
  std::vector<PoolNode> nodes;
  if (node == nullptr) {
    nodes.push_back(PoolNode{NodeKind::kDone, -1, {}});
  } else {
    build_pool(set, nodes, node);
  }
  set.candidates.push_back(std::move(nodes));
  set.programs.push_back(tokenize_term(partial_program));
}

void set_examples(CandidateSet& set, const Problem& problem) {
  set.examples.clear();
  for (const Example& ex : problem.examples) {
    set.examples.emplace_back(tokenize_term(ex.input), tokenize_term(ex.output));
  }
}

CandidateSet candidate_set(const SearchView& view, const Problem& problem) {
  CandidateSet set;
  set_examples(set, problem);
  for (std::size_t i = 0; i < view.size(); ++i) add_candidate(set, view.constraints(i), view.program(i));
  return set;
}

CandidateSet candidate_set(const ConstraintTree& tree, const Problem& problem) {
  return candidate_set(SearchView(tree, 0), problem);
}

double pool(const std::vector<PoolNode>& nodes, const std::vector<double>& leaf_scores, int at) {
  const PoolNode& n = nodes[static_cast<std::size_t>(at)];
  switch (n.kind) {
    case NodeKind::kSuspend:
      return leaf_scores[static_cast<std::size_t>(n.leaf)];
    case NodeKind::kDone:
      return kDoneScore;
    case NodeKind::kFail:
      return -std::numeric_limits<double>::infinity();
    case NodeKind::kConj: {
      if (n.children.empty()) return kDoneScore;
      double sum = 0;
      for (int c : n.children) sum += pool(nodes, leaf_scores, c);
      return sum / static_cast<double>(n.children.size());
    }
    case NodeKind::kDisj: {
      double best = -std::numeric_limits<double>::infinity();
      for (int c : n.children) best = std::max(best, pool(nodes, leaf_scores, c));
      return best;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Choice.

std::vector<double> softmax(const std::vector<double>& scores) {
  std::vector<double> p(scores.size(), 0.0);
  std::size_t infinite = 0;
  for (double s : scores) infinite += (std::isinf(s) && s > 0) ? 1 : 0;
  if (infinite > 0) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (std::isinf(scores[i]) && scores[i] > 0) p[i] = 1.0 / static_cast<double>(infinite);
    }
    return p;
  }
  double m = *std::max_element(scores.begin(), scores.end());
  if (std::isinf(m)) {
    // Every score is -inf: nothing to prefer.
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  double z = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - m);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

std::size_t choose_candidate(const std::vector<double>& scores, ChoiceMode mode, std::mt19937_64& rng) {
  if (scores.empty()) throw std::invalid_argument("choose_candidate needs at least one score");
  if (mode == ChoiceMode::kTest) {
    return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  }
  std::vector<double> p = softmax(scores);
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    last = i;
    acc += p[i];
    if (u < acc) return i;
  }
  return last;
}

// ---------------------------------------------------------------------------
// Model.

struct GuidanceModel::MlpTape {
  nn::MlpTape t;
};

struct GuidanceModel::EncoderTape {
  std::vector<int> tokens;  // all streams, concatenated
  nn::SeqBatch batch;
  nn::LstmTape t[2][2];
};

int GuidanceModel::add(const std::string& name, int rows, int cols) {
  by_name_[name] = static_cast<int>(params_.size());
  params_.push_back(Parameter{name, Eigen::MatrixXd::Zero(rows, cols)});
  return static_cast<int>(params_.size()) - 1;
}

int GuidanceModel::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

void GuidanceModel::build(const GuidanceConfig& config) {
  if (config.embed < 1 || config.hidden < 1) throw std::invalid_argument("model dimensions must be positive");
  config_ = config;
  params_.clear();
  by_name_.clear();
  embedding_.clear();
  encoders_.clear();
  const int E = config.embed;
  const int H = config.hidden;
  for (const std::string& tok : vocabulary()) embedding_.push_back(add("embed:" + tok, E, 1));
  std::vector<std::string> names;
  if (config.baseline) {
    names.push_back("shared");
  } else {
    for (int r = 0; r < kRelationCount; ++r) names.emplace_back(relation_name(static_cast<Relation>(r)));
  }
  for (const std::string& enc_name : names) {
    Encoder enc{};
    for (int layer = 0; layer < 2; ++layer) {
      const int in = layer == 0 ? E : 2 * H;
      for (int dir = 0; dir < 2; ++dir) {
        std::string prefix = enc_name + "/l" + std::to_string(layer) + (dir == 0 ? "/fwd/" : "/bwd/");
        enc.cell[layer][dir] = Lstm{add(prefix + "W", 4 * H, in), add(prefix + "U", 4 * H, H), add(prefix + "b", 4 * H, 1)};
      }
    }
    encoders_.push_back(enc);
  }
  const int features = config.baseline ? 6 * H : 2 * H;
  W1_ = add("scorer/W1", H, features);
  b1_ = add("scorer/b1", H, 1);
  W2_ = add("scorer/W2", 1, H);
  b2_ = add("scorer/b2", 1, 1);
}

GuidanceModel GuidanceModel::create(const GuidanceConfig& config, std::uint64_t seed) {
  GuidanceModel m;
  m.build(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  const int H = config.hidden;
  for (Parameter& p : m.params_) {
    const bool bias = p.name.size() >= 2 && (p.name.ends_with("/b") || p.name.ends_with("/b1") || p.name.ends_with("/b2"));
    if (bias) {
      p.value.setZero();
      if (p.name.ends_with("/b")) p.value.block(H, 0, H, 1).setOnes();  // forget gate
      continue;
    }
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = u(rng);
  }
  return m;
}

std::size_t GuidanceModel::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Gradients GuidanceModel::zero_gradients() const {
  Gradients g;
  for (const Parameter& p : params_) g.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  return g;
}

const GuidanceModel::Encoder& GuidanceModel::encoder_for(Relation r) const {
  if (config_.baseline) return encoders_.front();
  const auto i = static_cast<std::size_t>(r);
  if (i >= encoders_.size()) throw std::out_of_range("no weights for relation " + std::string(relation_name(r)));
  return encoders_[i];
}

Eigen::MatrixXd GuidanceModel::encode(const Encoder& enc, const std::vector<const std::vector<int>*>& streams,
                                      EncoderTape* tape) const {
  const int H = config_.hidden;
  std::vector<Eigen::Index> lengths;
  for (const std::vector<int>* s : streams) {
    if (s->empty()) throw std::invalid_argument("cannot encode an empty token stream");
    lengths.push_back(static_cast<Eigen::Index>(s->size()));
  }
  EncoderTape local;
  EncoderTape& tp = tape != nullptr ? *tape : local;
  tp.batch = nn::SeqBatch(lengths);
  tp.tokens.clear();
  for (const std::vector<int>* s : streams) tp.tokens.insert(tp.tokens.end(), s->begin(), s->end());
  const Eigen::Index total = tp.batch.total;
  Eigen::MatrixXd x(config_.embed, total);
  for (Eigen::Index t = 0; t < total; ++t) {
    x.col(t) = params_[static_cast<std::size_t>(embedding_.at(static_cast<std::size_t>(tp.tokens[t])))].value.col(0);
  }
  for (int layer = 0; layer < 2; ++layer) {
    Eigen::MatrixXd next(2 * H, total);
    for (int dir = 0; dir < 2; ++dir) {
      const Lstm& c = enc.cell[layer][dir];
      nn::LstmWeights w{&params_[c.W].value, &params_[c.U].value, &params_[c.b].value};
      next.middleRows(dir * H, H) =
          nn::lstm_forward(w, tp.batch, x, dir == 1, tape != nullptr ? &tp.t[layer][dir] : nullptr);
    }
    x = std::move(next);
  }
  Eigen::MatrixXd out(2 * H, static_cast<Eigen::Index>(streams.size()));
  for (std::size_t k = 0; k < streams.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    out.col(col).head(H) = x.col(tp.batch.offset[k] + tp.batch.length[k] - 1).head(H);
    out.col(col).tail(H) = x.col(tp.batch.offset[k]).tail(H);
  }
  return out;
}

void GuidanceModel::encode_backward(const Encoder& enc, const EncoderTape& tape, const Eigen::MatrixXd& dout,
                                    Gradients& grads) const {
  const int H = config_.hidden;
  const Eigen::Index total = tape.batch.total;
  Eigen::MatrixXd dnext = Eigen::MatrixXd::Zero(2 * H, total);
  for (std::size_t k = 0; k < tape.batch.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    dnext.col(tape.batch.offset[k] + tape.batch.length[k] - 1).head(H) += dout.col(col).head(H);
    dnext.col(tape.batch.offset[k]).tail(H) += dout.col(col).tail(H);
  }
  for (int layer = 1; layer >= 0; --layer) {
    const int in = layer == 0 ? config_.embed : 2 * H;
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(in, total);
    for (int dir = 0; dir < 2; ++dir) {
      const Lstm& c = enc.cell[layer][dir];
      nn::LstmWeights w{&params_[c.W].value, &params_[c.U].value, &params_[c.b].value};
      nn::LstmGrads g{&grads[c.W], &grads[c.U], &grads[c.b]};
      dx += nn::lstm_backward(w, tape.batch, tape.t[layer][dir], dnext.middleRows(dir * H, H), g);
    }
    dnext = std::move(dx);
  }
  for (Eigen::Index t = 0; t < total; ++t) {
    grads[static_cast<std::size_t>(embedding_[static_cast<std::size_t>(tape.tokens[t])])].col(0) += dnext.col(t);
  }
}

Eigen::MatrixXd GuidanceModel::embed_leaves(const std::vector<const ConstraintLeaf*>& leaves,
                                            std::vector<EncoderTape>* tapes) const {
  Eigen::MatrixXd out(2 * config_.hidden, static_cast<Eigen::Index>(leaves.size()));
  if (tapes != nullptr) tapes->resize(kRelationCount);
  for (int r = 0; r < kRelationCount; ++r) {
    std::vector<const std::vector<int>*> streams;
    std::vector<Eigen::Index> cols;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      if (static_cast<int>(leaves[l]->relation) != r) continue;
      streams.push_back(&leaves[l]->tokens);
      cols.push_back(static_cast<Eigen::Index>(l));
    }
    if (streams.empty()) continue;
    Eigen::MatrixXd e = encode(encoder_for(static_cast<Relation>(r)), streams,
                               tapes != nullptr ? &(*tapes)[static_cast<std::size_t>(r)] : nullptr);
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(cols[k]) = e.col(static_cast<Eigen::Index>(k));
  }
  return out;
}

void GuidanceModel::embed_leaves_backward(const std::vector<const ConstraintLeaf*>& leaves,
                                          std::vector<EncoderTape>& tapes, const Eigen::MatrixXd& dout,
                                          Gradients& grads) const {
  for (int r = 0; r < kRelationCount; ++r) {
    std::vector<Eigen::Index> cols;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      if (static_cast<int>(leaves[l]->relation) == r) cols.push_back(static_cast<Eigen::Index>(l));
    }
    if (cols.empty()) continue;
    Eigen::MatrixXd d(dout.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) d.col(static_cast<Eigen::Index>(k)) = dout.col(cols[k]);
    encode_backward(encoder_for(static_cast<Relation>(r)), tapes[static_cast<std::size_t>(r)], d, grads);
  }
}

Eigen::VectorXd GuidanceModel::mlp(const Eigen::MatrixXd& x, MlpTape* tape) const {
  return nn::mlp_forward(params_[W1_].value, params_[b1_].value, params_[W2_].value, params_[b2_].value, x,
                         tape ? &tape->t : nullptr);
}

Eigen::MatrixXd GuidanceModel::mlp_backward(const MlpTape& tape, const Eigen::VectorXd& dy, Gradients& grads) const {
  return nn::mlp_backward(params_[W1_].value, params_[W2_].value, tape.t, dy, grads[W1_], grads[b1_], grads[W2_],
                          grads[b2_]);
}

Eigen::VectorXd GuidanceModel::embed_constraint(const std::vector<int>& tokens, Relation relation) const {
  if (config_.baseline) throw std::logic_error("the baseline model does not embed constraints");
  return encode(encoder_for(relation), {&tokens}, nullptr).col(0);
}

double GuidanceModel::score_constraint(const std::vector<int>& tokens, Relation relation) const {
  return mlp(embed_constraint(tokens, relation), nullptr)(0);
}

std::vector<double> GuidanceModel::score_constraints(const std::vector<const ConstraintLeaf*>& leaves) const {
  if (config_.baseline) throw std::logic_error("the baseline model does not embed constraints");
  if (leaves.empty()) return {};
  Eigen::VectorXd y = mlp(embed_leaves(leaves, nullptr), nullptr);
  return std::vector<double>(y.data(), y.data() + y.size());
}

double GuidanceModel::baseline_score(const Term& input, const Term& output, const Term& partial_program) const {
  if (!config_.baseline) throw std::logic_error("baseline_score needs a baseline model");
  const std::vector<int> in = tokenize_term(input);
  const std::vector<int> out = tokenize_term(output);
  const std::vector<int> prog = tokenize_term(partial_program);
  Eigen::MatrixXd e = encode(encoders_.front(), {&in, &out, &prog}, nullptr);
  Eigen::MatrixXd x(e.size(), 1);
  x.col(0) = Eigen::Map<const Eigen::VectorXd>(e.data(), e.size());
  return mlp(x, nullptr)(0);
}

namespace {

// Streams of a baseline batch: inputs and outputs of every example, then the
// programs of the unfinished candidates.
struct BaselineStreams {
  std::vector<const std::vector<int>*> streams;
  std::vector<std::size_t> open;  // candidate of each program stream
};

BaselineStreams baseline_streams(const CandidateSet& set) {
  if (set.examples.empty()) throw std::invalid_argument("baseline scoring needs the problem's examples");
  BaselineStreams b;
  for (const auto& [in, out] : set.examples) {
    b.streams.push_back(&in);
    b.streams.push_back(&out);
  }
  for (std::size_t c = 0; c < set.size(); ++c) {
    if (set.finished(c)) continue;
    b.streams.push_back(&set.programs[c]);
    b.open.push_back(c);
  }
  return b;
}

// Scorer inputs [in_k; out_k; prog_c], column c * K + k.
Eigen::MatrixXd baseline_inputs(const Eigen::MatrixXd& e, std::size_t K, std::size_t open) {
  const Eigen::Index D = e.rows();
  Eigen::MatrixXd x(3 * D, static_cast<Eigen::Index>(open * K));
  for (std::size_t c = 0; c < open; ++c) {
    for (std::size_t k = 0; k < K; ++k) {
      const auto col = static_cast<Eigen::Index>(c * K + k);
      x.col(col).segment(0, D) = e.col(static_cast<Eigen::Index>(2 * k));
      x.col(col).segment(D, D) = e.col(static_cast<Eigen::Index>(2 * k + 1));
      x.col(col).segment(2 * D, D) = e.col(static_cast<Eigen::Index>(2 * K + c));
    }
  }
  return x;
}

std::vector<const ConstraintLeaf*> leaf_pointers(const CandidateSet& set) {
  std::vector<const ConstraintLeaf*> out;
  for (const ConstraintLeaf& l : set.leaves) out.push_back(&l);
  return out;
}

}  // namespace

std::vector<double> GuidanceModel::score(const CandidateSet& set) const {
  std::vector<double> scores(set.size(), kDoneScore);
  if (config_.baseline) {
    BaselineStreams b = baseline_streams(set);
    const std::size_t K = set.examples.size();
    if (b.open.empty()) return scores;
    Eigen::VectorXd y = mlp(baseline_inputs(encode(encoders_.front(), b.streams, nullptr), K, b.open.size()), nullptr);
    for (std::size_t c = 0; c < b.open.size(); ++c) {
      double sum = 0;
      for (std::size_t k = 0; k < K; ++k) sum += y(static_cast<Eigen::Index>(c * K + k));
      scores[b.open[c]] = sum / static_cast<double>(K);
    }
    return scores;
  }
  std::vector<double> leaf = score_constraints(leaf_pointers(set));
  for (std::size_t c = 0; c < set.size(); ++c) scores[c] = pool(set.candidates[c], leaf);
  return scores;
}

double GuidanceModel::loss(const CandidateSet& set, std::size_t target, Gradients* grads) const {
  if (target >= set.size()) throw std::out_of_range("target index out of range");
  if (grads != nullptr && grads->size() != params_.size()) throw std::invalid_argument("gradient shape mismatch");
  return config_.baseline ? baseline_loss(set, target, grads) : guided_loss(set, target, grads);
}

double GuidanceModel::guided_loss(const CandidateSet& set, std::size_t target, Gradients* grads) const {
  const std::vector<const ConstraintLeaf*> leaves = leaf_pointers(set);
  std::vector<EncoderTape> enc_tapes;
  MlpTape mlp_tape;
  std::vector<double> leaf;
  Eigen::MatrixXd e;
  if (!leaves.empty()) {
    e = embed_leaves(leaves, grads ? &enc_tapes : nullptr);
    Eigen::VectorXd y = mlp(e, grads ? &mlp_tape : nullptr);
    leaf.assign(y.data(), y.data() + y.size());
  }
  std::vector<double> scores(set.size());
  for (std::size_t c = 0; c < set.size(); ++c) scores[c] = pool(set.candidates[c], leaf);
  std::vector<double> dscores;
  const double value = cross_entropy(scores, target, dscores);
  if (grads == nullptr || leaves.empty()) return value;
  std::vector<double> dleaf(leaves.size(), 0.0);
  for (std::size_t c = 0; c < set.size(); ++c) {
    if (dscores[c] != 0.0) pool_backward(set.candidates[c], leaf, 0, dscores[c], dleaf);
  }
  Eigen::VectorXd dy = Eigen::Map<const Eigen::VectorXd>(dleaf.data(), static_cast<Eigen::Index>(dleaf.size()));
  Eigen::MatrixXd de = mlp_backward(mlp_tape, dy, *grads);
  embed_leaves_backward(leaves, enc_tapes, de, *grads);
  return value;
}

double GuidanceModel::baseline_loss(const CandidateSet& set, std::size_t target, Gradients* grads) const {
  BaselineStreams b = baseline_streams(set);
  const std::size_t K = set.examples.size();
  std::vector<double> scores(set.size(), kDoneScore);
  EncoderTape enc_tape;
  MlpTape mlp_tape;
  Eigen::VectorXd y;
  if (!b.open.empty()) {
    Eigen::MatrixXd e = encode(encoders_.front(), b.streams, grads ? &enc_tape : nullptr);
    y = mlp(baseline_inputs(e, K, b.open.size()), grads ? &mlp_tape : nullptr);
    for (std::size_t c = 0; c < b.open.size(); ++c) {
      double sum = 0;
      for (std::size_t k = 0; k < K; ++k) sum += y(static_cast<Eigen::Index>(c * K + k));
      scores[b.open[c]] = sum / static_cast<double>(K);
    }
  }
  std::vector<double> dscores;
  const double value = cross_entropy(scores, target, dscores);
  if (grads == nullptr || b.open.empty()) return value;
  Eigen::VectorXd dy(y.size());
  for (std::size_t c = 0; c < b.open.size(); ++c) {
    for (std::size_t k = 0; k < K; ++k) dy(static_cast<Eigen::Index>(c * K + k)) = dscores[b.open[c]] / static_cast<double>(K);
  }
  Eigen::MatrixXd dx = mlp_backward(mlp_tape, dy, *grads);
  const Eigen::Index D = 2 * config_.hidden;
  Eigen::MatrixXd de = Eigen::MatrixXd::Zero(D, static_cast<Eigen::Index>(b.streams.size()));
  for (std::size_t c = 0; c < b.open.size(); ++c) {
    for (std::size_t k = 0; k < K; ++k) {
      const auto col = static_cast<Eigen::Index>(c * K + k);
      de.col(static_cast<Eigen::Index>(2 * k)) += dx.col(col).segment(0, D);
      de.col(static_cast<Eigen::Index>(2 * k + 1)) += dx.col(col).segment(D, D);
      de.col(static_cast<Eigen::Index>(2 * K + c)) += dx.col(col).segment(2 * D, D);
    }
  }
  encode_backward(encoders_.front(), enc_tape, de, *grads);
  return value;
}

bool operator==(const GuidanceModel& a, const GuidanceModel& b) {
  if (a.config_.embed != b.config_.embed || a.config_.hidden != b.config_.hidden ||
      a.config_.baseline != b.config_.baseline || a.params_.size() != b.params_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    const Parameter& p = a.params_[i];
    const Parameter& q = b.params_[i];
    if (p.name != q.name || p.value.rows() != q.value.rows() || p.value.cols() != q.value.cols()) return false;
    // Bitwise, so that -0.0 and NaN payloads count.
    if (std::memcmp(p.value.data(), q.value.data(), sizeof(double) * static_cast<std::size_t>(p.value.size())) != 0) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

constexpr std::string_view kHeader = "guidance-ckpt v1";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

void GuidanceModel::save(std::ostream& out) const {
  out << kHeader << '\n';
  char buf[64];
  for (const Parameter& p : params_) {
    out << p.name << " dims " << p.value.rows() << ' ' << p.value.cols() << '\n';
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        // Shortest representation that parses back to the same double.
        auto res = std::to_chars(buf, buf + sizeof buf, p.value(r, c));
        if (r != 0 || c != 0) out << ' ';
        out.write(buf, res.ptr - buf);
      }
    }
    out << '\n';
  }
  out << "end\n";
}

void GuidanceModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  save(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed for checkpoint " + path);
}

GuidanceModel GuidanceModel::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError("empty checkpoint");
  if (line != kHeader) throw CheckpointError("bad checkpoint header '" + line + "', expected '" + std::string(kHeader) + "'");

  struct Raw {
    Eigen::Index rows, cols;
    std::vector<double> values;
  };
  std::vector<std::pair<std::string, Raw>> tensors;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::vector<std::string> head = split(line);
    if (head.size() < 3 || head[1] != "dims") throw CheckpointError("bad tensor header '" + line + "'");
    Raw raw{1, 1, {}};
    std::vector<long> dims;
    for (std::size_t i = 2; i < head.size(); ++i) {
      long d = 0;
      auto res = std::from_chars(head[i].data(), head[i].data() + head[i].size(), d);
      if (res.ec != std::errc() || res.ptr != head[i].data() + head[i].size() || d < 0) {
        throw CheckpointError("bad dimension '" + head[i] + "' for tensor " + head[0]);
      }
      dims.push_back(d);
    }
    if (dims.size() > 2) throw CheckpointError("tensor " + head[0] + " has more than two dimensions");
    raw.rows = dims[0];
    raw.cols = dims.size() == 2 ? dims[1] : 1;
    if (!std::getline(in, line)) throw CheckpointError("truncated checkpoint: no values for tensor " + head[0]);
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double v = 0;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw CheckpointError("bad value in tensor " + head[0]);
      raw.values.push_back(v);
      p = res.ptr;
    }
    if (static_cast<Eigen::Index>(raw.values.size()) != raw.rows * raw.cols) {
      if (in.eof()) throw CheckpointError("truncated checkpoint: tensor " + head[0] + " is cut short");
      throw CheckpointError("tensor " + head[0] + " has " + std::to_string(raw.values.size()) + " values, expected " +
                            std::to_string(raw.rows * raw.cols));
    }
    tensors.emplace_back(head[0], std::move(raw));
  }
  if (!ended) throw CheckpointError("truncated checkpoint: missing 'end'");

  // Vocabulary first, so a mismatch names the token.
  std::unordered_map<std::string, const Raw*> by_name;
  for (const auto& [name, raw] : tensors) {
    if (!by_name.emplace(name, &raw).second) throw CheckpointError("duplicate tensor " + name);
    if (name.starts_with("embed:")) {
      std::string tok = name.substr(6);
      const auto& v = vocabulary();
      if (std::find(v.begin(), v.end(), tok) == v.end()) {
        throw CheckpointError("vocabulary mismatch: unknown token '" + tok + "'");
      }
    }
  }
  for (const std::string& tok : vocabulary()) {
    if (!by_name.count("embed:" + tok)) throw CheckpointError("vocabulary mismatch: missing token '" + tok + "'");
  }
  auto need = [&](const std::string& name) -> const Raw& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw CheckpointError("missing tensor " + name);
    return *it->second;
  };
  GuidanceConfig config;
  config.embed = static_cast<int>(need("embed:(").rows);
  config.hidden = static_cast<int>(need("scorer/b1").rows);
  config.baseline = by_name.count("shared/l0/fwd/W") > 0;
  if (config.embed < 1 || config.hidden < 1) throw CheckpointError("checkpoint has empty dimensions");

  GuidanceModel m;
  m.build(config);
  if (m.params_.size() != tensors.size()) {
    for (const auto& [name, raw] : tensors) {
      if (m.index_of(name) < 0) throw CheckpointError("unexpected tensor " + name);
    }
  }
  for (Parameter& p : m.params_) {
    const Raw& raw = need(p.name);
    if (raw.rows != p.value.rows() || raw.cols != p.value.cols()) {
      throw CheckpointError("shape mismatch for " + p.name + ": got " + std::to_string(raw.rows) + "x" +
                            std::to_string(raw.cols) + ", expected " + std::to_string(p.value.rows()) + "x" +
                            std::to_string(p.value.cols()));
    }
    for (Eigen::Index r = 0; r < raw.rows; ++r) {
      for (Eigen::Index c = 0; c < raw.cols; ++c) p.value(r, c) = raw.values[static_cast<std::size_t>(r * raw.cols + c)];
    }
  }
  return m;
}

GuidanceModel GuidanceModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return load(in);
}

// ---------------------------------------------------------------------------
// Policy.

GuidedPolicy::GuidedPolicy(const GuidanceModel& model, ChoiceMode mode, std::uint64_t seed)
    : model_(model), mode_(mode), rng_(seed) {}

void GuidedPolicy::begin(const Problem& problem) {
  problem_ = problem;
  branch_cache_.clear();
}

std::vector<double> GuidedPolicy::scores(const SearchView& view) {
  std::vector<double> out(view.size(), kDoneScore);
  std::unordered_map<std::uint64_t, std::pair<NodePtr, double>> live;
  // Branches whose score is not cached are scored together.
  std::vector<std::size_t> fresh;
  for (std::size_t i = 0; i < view.size(); ++i) {
    NodePtr node = view.constraints(i);
    if (node == nullptr) continue;
    auto hit = branch_cache_.find(view.serial(i));
    if (hit != branch_cache_.end() && hit->second.first == node) {
      out[i] = hit->second.second;
    } else {
      fresh.push_back(i);
    }
  }
  if (!fresh.empty() && model_.baseline()) {
    CandidateSet set;
    set_examples(set, problem_);
    for (std::size_t i : fresh) add_candidate(set, view.constraints(i), view.program(i));
    std::vector<double> s = model_.score(set);
    for (std::size_t j = 0; j < fresh.size(); ++j) out[fresh[j]] = s[j];
  } else if (!fresh.empty()) {
    CandidateSet set;
    std::vector<std::vector<PoolNode>> pools(fresh.size());
    for (std::size_t j = 0; j < fresh.size(); ++j) build_pool(set, pools[j], view.constraints(fresh[j]));
    if (leaf_cache_.size() > 1'000'000) leaf_cache_.clear();
    std::vector<std::string> keys;
    std::vector<const ConstraintLeaf*> missing;
    for (const ConstraintLeaf& l : set.leaves) {
      keys.push_back(leaf_key(l.relation, l.tokens));
      if (!leaf_cache_.count(keys.back())) missing.push_back(&l);
    }
    std::vector<double> computed = model_.score_constraints(missing);
    for (std::size_t m = 0; m < missing.size(); ++m) {
      leaf_cache_.emplace(leaf_key(missing[m]->relation, missing[m]->tokens), computed[m]);
    }
    std::vector<double> leaf;
    for (const std::string& k : keys) leaf.push_back(leaf_cache_.at(k));
    for (std::size_t j = 0; j < fresh.size(); ++j) out[fresh[j]] = pool(pools[j], leaf);
  }
  for (std::size_t i = 0; i < view.size(); ++i) {
    if (NodePtr node = view.constraints(i)) live.emplace(view.serial(i), std::make_pair(node, out[i]));
  }
  branch_cache_ = std::move(live);
  return out;
}

std::vector<std::size_t> GuidedPolicy::choose(const SearchView& view, std::size_t count) {
  std::vector<double> s = scores(view);
  // Finished branches that reach a decision are not solutions; skip them.
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (view.constraints(i) == nullptr) s[i] = -std::numeric_limits<double>::infinity();
  }
  std::vector<std::size_t> picks;
  if (mode_ == ChoiceMode::kTest) {
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    for (std::size_t i : order) {
      if (picks.size() == count) break;
      if (view.constraints(i) != nullptr) picks.push_back(i);
    }
    return picks;
  }
  std::size_t open = 0;
  for (std::size_t i = 0; i < s.size(); ++i) open += view.constraints(i) != nullptr ? 1 : 0;
  while (picks.size() < std::min(count, open)) {
    std::size_t i = choose_candidate(s, ChoiceMode::kTrain, rng_);
    picks.push_back(i);
    s[i] = -std::numeric_limits<double>::infinity();
  }
  return picks;
}

}  // namespace mkguide
