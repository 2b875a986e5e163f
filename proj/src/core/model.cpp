#include "core/model.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace distner {

namespace {

constexpr char kMagic[4] = {'D', 'N', 'E', 'R'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

struct ByteReader {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size())
      fail(ErrorKind::Parse, "model file truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, bytes.data() + pos, 8);
    pos += 8;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, bytes.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(bytes.data() + pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

Model Model::init(const LabelSpace& labels, std::vector<std::string> vocab,
                  const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.dim <= 0 || cfg.hidden <= 0)
    fail(ErrorKind::InvalidArgument, "embedding and hidden dimensions must be positive");
  if (cfg.context_window < 0)
    fail(ErrorKind::InvalidArgument, "context window cannot be negative");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    fail(ErrorKind::InvalidArgument, "dropout must lie in [0, 1)");
  if (cfg.max_span_len < 1)
    fail(ErrorKind::InvalidArgument, "max span length must be at least 1");

  Model m;
  m.labels_ = labels;
  m.cfg_ = cfg;
  m.vocab_ = std::move(vocab);
  for (std::size_t i = 0; i < m.vocab_.size(); ++i)
    m.vocab_index_.emplace(m.vocab_[i], static_cast<int>(i));

  const std::size_t d = static_cast<std::size_t>(cfg.dim);
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t f = static_cast<std::size_t>(m.feature_dim());
  const std::size_t c = static_cast<std::size_t>(m.out_dim());
  m.emb_size_ = cfg.trainable_embeddings ? (m.vocab_.size() + 1) * d : 0;
  m.theta_.assign(m.emb_size_ + h * f + h + c * h + c, 0.0);

  // Uniform +-1/sqrt(fan_in) weights, zero biases, except a head start for
  // the O logit so spans the training never touches default to O instead of
  // an arbitrary class.
  Rng rng(derive_seed(seed, Stream::Init));
  double emb_bound = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  for (std::size_t i = 0; i < m.emb_size_; ++i)
    m.theta_[i] = rng.uniform(-emb_bound, emb_bound);
  double w1_bound = 1.0 / std::sqrt(static_cast<double>(f));
  for (std::size_t i = 0; i < h * f; ++i)
    m.theta_[m.off_w1() + i] = rng.uniform(-w1_bound, w1_bound);
  double w2_bound = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t i = 0; i < c * h; ++i)
    m.theta_[m.off_w2() + i] = rng.uniform(-w2_bound, w2_bound);
  m.theta_[m.off_b2() + static_cast<std::size_t>(m.labels_.o_index())] = cfg.o_logit_bias;
  return m;
}

int Model::token_id(const std::string& token) const {
  auto it = vocab_index_.find(token);
  return it == vocab_index_.end() ? unk_id() : it->second;
}

std::vector<double> Model::token_reps(const Sentence& s, const FileEmbeddings* file) const {
  const int n = s.length();
  const int d = cfg_.dim;
  std::vector<double> raw(static_cast<std::size_t>(n) * d, 0.0);
  if (cfg_.trainable_embeddings) {
    for (int i = 0; i < n; ++i) {
      int id = token_id(s.tokens[static_cast<std::size_t>(i)]);
      const double* row = theta_.data() + static_cast<std::size_t>(id) * d;
      std::memcpy(raw.data() + static_cast<std::size_t>(i) * d, row,
                  sizeof(double) * static_cast<std::size_t>(d));
    }
  } else {
    if (!file)
      fail(ErrorKind::InvalidArgument,
           "model expects file-backed embeddings but the dataset has none attached");
    if (file->dim() != d)
      fail(ErrorKind::InvalidArgument,
           "embedding file dimension " + std::to_string(file->dim()) +
               " does not match model dimension " + std::to_string(d));
    for (int i = 0; i < n; ++i) {
      const std::vector<double>& v = file->at(s.id, i);
      std::memcpy(raw.data() + static_cast<std::size_t>(i) * d, v.data(),
                  sizeof(double) * static_cast<std::size_t>(d));
    }
  }
  if (cfg_.context_window == 0) return raw;

  // Mean over the clamped window [i-w, i+w].
  const int w = cfg_.context_window;
  std::vector<double> out(static_cast<std::size_t>(n) * d, 0.0);
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - w);
    int hi = std::min(n - 1, i + w);
    double inv = 1.0 / static_cast<double>(hi - lo + 1);
    double* dst = out.data() + static_cast<std::size_t>(i) * d;
    for (int k = lo; k <= hi; ++k) {
      const double* src = raw.data() + static_cast<std::size_t>(k) * d;
      for (int c = 0; c < d; ++c) dst[c] += src[c];
    }
    for (int c = 0; c < d; ++c) dst[c] *= inv;
  }
  return out;
}

void Model::mlp_forward(const double* features, std::vector<double>& hidden_act,
                        std::vector<double>& probs) const {
  const std::size_t f = static_cast<std::size_t>(feature_dim());
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden);
  const std::size_t c = static_cast<std::size_t>(out_dim());
  const double* w1 = theta_.data() + off_w1();
  const double* b1 = theta_.data() + off_b1();
  const double* w2 = theta_.data() + off_w2();
  const double* b2 = theta_.data() + off_b2();

  hidden_act.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double* row = w1 + j * f;
    double z = b1[j];
    for (std::size_t k = 0; k < f; ++k) z += row[k] * features[k];
    hidden_act[j] = std::tanh(z);
  }
  probs.resize(c);
  double max_z = -1e300;
  for (std::size_t o = 0; o < c; ++o) {
    const double* row = w2 + o * h;
    double z = b2[o];
    for (std::size_t k = 0; k < h; ++k) z += row[k] * hidden_act[k];
    probs[o] = z;
    if (z > max_z) max_z = z;
  }
  double denom = 0.0;
  for (std::size_t o = 0; o < c; ++o) {
    probs[o] = std::exp(probs[o] - max_z);
    denom += probs[o];
  }
  for (std::size_t o = 0; o < c; ++o) probs[o] /= denom;
}

std::vector<double> span_feature(const std::vector<double>& h_i,
                                 const std::vector<double>& h_j) {
  if (h_i.size() != h_j.size())
    fail(ErrorKind::InvalidArgument, "span endpoints have mismatched vector lengths");
  const std::size_t d = h_i.size();
  std::vector<double> f(4 * d);
  for (std::size_t k = 0; k < d; ++k) {
    f[k] = h_i[k];
    f[d + k] = h_j[k];
    f[2 * d + k] = h_i[k] - h_j[k];
    f[3 * d + k] = h_i[k] * h_j[k];
  }
  return f;
}

std::vector<std::vector<double>> Model::predict_spans(
    const Sentence& s, const std::vector<std::pair<int, int>>& spans,
    const FileEmbeddings* file) const {
  std::vector<double> h = token_reps(s, file);
  const int d = cfg_.dim;
  std::vector<double> features(static_cast<std::size_t>(feature_dim()));
  std::vector<double> hidden_act;
  std::vector<std::vector<double>> out;
  out.reserve(spans.size());
  for (const auto& [i, j] : spans) {
    if (i < 0 || j >= s.length() || i > j)
      fail(ErrorKind::InvalidArgument, "span [" + std::to_string(i) + "," +
                                           std::to_string(j) + "] out of range");
    const double* hi = h.data() + static_cast<std::size_t>(i) * d;
    const double* hj = h.data() + static_cast<std::size_t>(j) * d;
    for (int k = 0; k < d; ++k) {
      features[static_cast<std::size_t>(k)] = hi[k];
      features[static_cast<std::size_t>(d + k)] = hj[k];
      features[static_cast<std::size_t>(2 * d + k)] = hi[k] - hj[k];
      features[static_cast<std::size_t>(3 * d + k)] = hi[k] * hj[k];
    }
    std::vector<double> probs;
    mlp_forward(features.data(), hidden_act, probs);
    out.push_back(std::move(probs));
  }
  return out;
}

double Model::loss_and_grad(const Sentence& s, const std::vector<Instance>& instances,
                            const FileEmbeddings* file, Rng* dropout_rng,
                            std::vector<double>& grad) const {
  if (grad.size() != theta_.size())
    fail(ErrorKind::InvalidArgument, "gradient buffer size mismatch");
  const int n = s.length();
  const int d = cfg_.dim;
  const std::size_t f = static_cast<std::size_t>(feature_dim());
  const std::size_t hd = static_cast<std::size_t>(cfg_.hidden);
  const std::size_t c = static_cast<std::size_t>(out_dim());
  const double* w1 = theta_.data() + off_w1();
  const double* w2 = theta_.data() + off_w2();
  double* g_w1 = grad.data() + off_w1();
  double* g_b1 = grad.data() + off_b1();
  double* g_w2 = grad.data() + off_w2();
  double* g_b2 = grad.data() + off_b2();

  std::vector<double> h = token_reps(s, file);
  std::vector<double> dh(h.size(), 0.0);
  std::vector<double> features(f), mask, hidden_act, probs, dfeat(f), dhidden(hd);
  const bool use_dropout = dropout_rng != nullptr && cfg_.dropout > 0.0;
  if (use_dropout) mask.resize(f);
  const double keep = 1.0 - cfg_.dropout;

  double total_loss = 0.0;
  for (const Instance& inst : instances) {
    if (inst.start < 0 || inst.end >= n || inst.start > inst.end)
      fail(ErrorKind::InvalidArgument, "training span out of range");
    if (inst.target < 0 || inst.target >= static_cast<int>(c))
      fail(ErrorKind::InvalidArgument, "training target out of range");
    const double* hi = h.data() + static_cast<std::size_t>(inst.start) * d;
    const double* hj = h.data() + static_cast<std::size_t>(inst.end) * d;
    for (int k = 0; k < d; ++k) {
      features[static_cast<std::size_t>(k)] = hi[k];
      features[static_cast<std::size_t>(d + k)] = hj[k];
      features[static_cast<std::size_t>(2 * d + k)] = hi[k] - hj[k];
      features[static_cast<std::size_t>(3 * d + k)] = hi[k] * hj[k];
    }
    if (use_dropout) {
      for (std::size_t k = 0; k < f; ++k) {
        mask[k] = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
        features[k] *= mask[k];
      }
    }
    mlp_forward(features.data(), hidden_act, probs);
    double p = probs[static_cast<std::size_t>(inst.target)];
    total_loss += -std::log(std::max(p, 1e-300));

    // Softmax + cross-entropy backward.
    for (std::size_t o = 0; o < c; ++o) {
      double dz = probs[o] - (static_cast<int>(o) == inst.target ? 1.0 : 0.0);
      g_b2[o] += dz;
      double* g_row = g_w2 + o * hd;
      for (std::size_t k = 0; k < hd; ++k) g_row[k] += dz * hidden_act[k];
    }
    for (std::size_t k = 0; k < hd; ++k) {
      double da = 0.0;
      for (std::size_t o = 0; o < c; ++o)
        da += (probs[o] - (static_cast<int>(o) == inst.target ? 1.0 : 0.0)) * w2[o * hd + k];
      dhidden[k] = da * (1.0 - hidden_act[k] * hidden_act[k]);
    }
    std::fill(dfeat.begin(), dfeat.end(), 0.0);
    for (std::size_t k = 0; k < hd; ++k) {
      double dz1 = dhidden[k];
      g_b1[k] += dz1;
      const double* row = w1 + k * f;
      double* g_row = g_w1 + k * f;
      for (std::size_t q = 0; q < f; ++q) {
        g_row[q] += dz1 * features[q];
        dfeat[q] += dz1 * row[q];
      }
    }
    if (use_dropout)
      for (std::size_t k = 0; k < f; ++k) dfeat[k] *= mask[k];

    double* dhi = dh.data() + static_cast<std::size_t>(inst.start) * d;
    double* dhj = dh.data() + static_cast<std::size_t>(inst.end) * d;
    for (int k = 0; k < d; ++k) {
      double d0 = dfeat[static_cast<std::size_t>(k)];
      double d1 = dfeat[static_cast<std::size_t>(d + k)];
      double d2 = dfeat[static_cast<std::size_t>(2 * d + k)];
      double d3 = dfeat[static_cast<std::size_t>(3 * d + k)];
      dhi[k] += d0 + d2 + d3 * hj[k];
      dhj[k] += d1 - d2 + d3 * hi[k];
    }
  }

  if (cfg_.trainable_embeddings && !instances.empty()) {
    // Push gradients through the context average back onto embedding rows.
    const int w = cfg_.context_window;
    for (int i = 0; i < n; ++i) {
      const double* src = dh.data() + static_cast<std::size_t>(i) * d;
      bool any = false;
      for (int k = 0; k < d && !any; ++k) any = src[k] != 0.0;
      if (!any) continue;
      int lo = w == 0 ? i : std::max(0, i - w);
      int hi_pos = w == 0 ? i : std::min(n - 1, i + w);
      double inv = 1.0 / static_cast<double>(hi_pos - lo + 1);
      for (int k = lo; k <= hi_pos; ++k) {
        int id = token_id(s.tokens[static_cast<std::size_t>(k)]);
        double* g_row = grad.data() + static_cast<std::size_t>(id) * d;
        for (int q = 0; q < d; ++q) g_row[q] += src[q] * inv;
      }
    }
  }
  return total_loss;
}

std::string Model::serialize() const {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(cfg_.dim));
  put_u32(out, static_cast<std::uint32_t>(cfg_.hidden));
  put_u32(out, static_cast<std::uint32_t>(labels_.size()));
  put_u32(out, static_cast<std::uint32_t>(vocab_.size()));
  put_u32(out, static_cast<std::uint32_t>(cfg_.context_window));
  put_u32(out, static_cast<std::uint32_t>(cfg_.max_span_len));
  put_u32(out, cfg_.trainable_embeddings ? 1 : 0);
  put_f64(out, cfg_.dropout);
  put_f64(out, cfg_.o_logit_bias);
  for (const auto& name : labels_.names()) put_str(out, name);
  for (const auto& tok : vocab_) put_str(out, tok);
  put_u64(out, theta_.size());
  for (double v : theta_) put_f64(out, v);
  return out.str();
}

Model Model::deserialize(const std::string& bytes) {
  ByteReader r{bytes};
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(ErrorKind::Parse, "not a model file (bad magic)");
  r.pos = 4;
  std::uint32_t version = r.u32();
  if (version != kVersion)
    fail(ErrorKind::Parse, "unsupported model file version " + std::to_string(version));

  Model m;
  m.cfg_.dim = static_cast<int>(r.u32());
  m.cfg_.hidden = static_cast<int>(r.u32());
  std::uint32_t n_labels = r.u32();
  std::uint32_t n_vocab = r.u32();
  m.cfg_.context_window = static_cast<int>(r.u32());
  m.cfg_.max_span_len = static_cast<int>(r.u32());
  m.cfg_.trainable_embeddings = r.u32() != 0;
  m.cfg_.dropout = r.f64();
  m.cfg_.o_logit_bias = r.f64();
  for (std::uint32_t i = 0; i < n_labels; ++i) m.labels_.add(r.str());
  for (std::uint32_t i = 0; i < n_vocab; ++i) {
    m.vocab_.push_back(r.str());
    m.vocab_index_.emplace(m.vocab_.back(), static_cast<int>(i));
  }
  m.emb_size_ = m.cfg_.trainable_embeddings
                    ? (m.vocab_.size() + 1) * static_cast<std::size_t>(m.cfg_.dim)
                    : 0;
  std::uint64_t n_params = r.u64();
  std::size_t expected = m.emb_size_ +
                         static_cast<std::size_t>(m.cfg_.hidden) * m.feature_dim() +
                         static_cast<std::size_t>(m.cfg_.hidden) +
                         static_cast<std::size_t>(m.out_dim()) * m.cfg_.hidden +
                         static_cast<std::size_t>(m.out_dim());
  if (n_params != expected)
    fail(ErrorKind::Parse, "model file parameter count does not match its header");
  m.theta_.resize(n_params);
  for (std::uint64_t i = 0; i < n_params; ++i) m.theta_[i] = r.f64();
  return m;
}

void Model::save(const std::string& path) const { write_file(path, serialize()); }

Model Model::load(const std::string& path) { return deserialize(read_file(path)); }

bool Model::operator==(const Model& other) const {
  return labels_ == other.labels_ && vocab_ == other.vocab_ &&
         cfg_.dim == other.cfg_.dim && cfg_.hidden == other.cfg_.hidden &&
         cfg_.context_window == other.cfg_.context_window &&
         cfg_.max_span_len == other.cfg_.max_span_len &&
         cfg_.dropout == other.cfg_.dropout &&
         cfg_.o_logit_bias == other.cfg_.o_logit_bias &&
         cfg_.trainable_embeddings == other.cfg_.trainable_embeddings &&
         theta_ == other.theta_;
}

AdamW::AdamW(std::size_t n_params, double lr, double weight_decay, double beta1,
             double beta2, double eps)
    : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(n_params, 0.0), v_(n_params, 0.0) {}

void AdamW::step(std::vector<double>& theta, const std::vector<double>& grad) {
  if (theta.size() != m_.size() || grad.size() != m_.size())
    fail(ErrorKind::InvalidArgument, "optimizer/parameter size mismatch");
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double g = grad[i];
    if (!std::isfinite(g))
      fail(ErrorKind::TrainingAbort,
           "non-finite gradient at parameter " + std::to_string(i));
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    double m_hat = m_[i] / bc1;
    double v_hat = v_[i] / bc2;
    theta[i] -= lr_ * (m_hat / (std::sqrt(v_hat) + eps_) + wd_ * theta[i]);
  }
}

}  // namespace distner
