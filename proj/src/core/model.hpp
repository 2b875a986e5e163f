#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/corpus.hpp"

namespace distner {

struct ModelConfig {
  int dim = 64;
  int hidden = 256;
  int context_window = 1;   // 0 disables context averaging
  int max_span_len = 8;
  double dropout = 0.2;
  double o_logit_bias = 2.0;  // start with a prior towards O for unseen spans
  bool trainable_embeddings = true;
};

// The span feature block: [h_i ; h_j ; h_i - h_j ; h_i * h_j], 4d wide.
std::vector<double> span_feature(const std::vector<double>& h_i,
                                 const std::vector<double>& h_j);

// Span classifier: token vectors (trainable lookup table or frozen file
// vectors), optional context-window averaging, then an MLP over the
// concatenated span features [h_i ; h_j ; h_i - h_j ; h_i * h_j] with one tanh
// hidden layer and a softmax over the entity types plus O.
//
// All learned parameters live in one flat array so the optimizer, the
// checkpoint writer and the finite-difference tests can treat them uniformly.
class Model {
 public:
  static Model init(const LabelSpace& labels, std::vector<std::string> vocab,
                    const ModelConfig& cfg, std::uint64_t seed);

  const LabelSpace& labels() const { return labels_; }
  const ModelConfig& config() const { return cfg_; }
  int dim() const { return cfg_.dim; }
  int hidden() const { return cfg_.hidden; }
  int out_dim() const { return labels_.num_classes(); }
  int feature_dim() const { return 4 * cfg_.dim; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  int unk_id() const { return static_cast<int>(vocab_.size()); }
  int token_id(const std::string& token) const;

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  // Parameter segment offsets into the flat array.
  std::size_t off_emb() const { return 0; }
  std::size_t off_w1() const { return emb_size_; }
  std::size_t off_b1() const { return off_w1() + static_cast<std::size_t>(cfg_.hidden) * feature_dim(); }
  std::size_t off_w2() const { return off_b1() + static_cast<std::size_t>(cfg_.hidden); }
  std::size_t off_b2() const { return off_w2() + static_cast<std::size_t>(out_dim()) * cfg_.hidden; }

  // Context-averaged token representations for one sentence, n x dim
  // flattened. File-backed models read the dataset's attached vectors.
  std::vector<double> token_reps(const Sentence& s, const FileEmbeddings* file) const;

  // Probability rows for the given spans, dropout never applied.
  std::vector<std::vector<double>> predict_spans(
      const Sentence& s, const std::vector<std::pair<int, int>>& spans,
      const FileEmbeddings* file) const;

  struct Instance {
    int start = 0;
    int end = 0;
    int target = 0;  // class index, O included
  };

  // Summed cross-entropy over the instances, accumulating d(loss)/d(theta)
  // into grad (which must match params in size). Pass a generator to apply
  // inverted dropout on the span features; null runs the deterministic path.
  double loss_and_grad(const Sentence& s, const std::vector<Instance>& instances,
                       const FileEmbeddings* file, Rng* dropout_rng,
                       std::vector<double>& grad) const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);
  std::string serialize() const;
  static Model deserialize(const std::string& bytes);

  bool operator==(const Model& other) const;

 private:
  Model() = default;
  void mlp_forward(const double* features, std::vector<double>& hidden_act,
                   std::vector<double>& probs) const;

  LabelSpace labels_;
  ModelConfig cfg_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> vocab_index_;
  std::size_t emb_size_ = 0;  // 0 for file-backed models
  std::vector<double> theta_;
};

// Adaptive moments with decoupled weight decay, bias-corrected, implemented
// from the published update rule.
class AdamW {
 public:
  AdamW(std::size_t n_params, double lr, double weight_decay = 0.0,
        double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::vector<double>& theta, const std::vector<double>& grad);
  std::int64_t steps_taken() const { return t_; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace distner
