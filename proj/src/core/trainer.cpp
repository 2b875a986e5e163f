#include "core/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace distner {

void TrainerConfig::validate() const {
  if (!seed_set)
    fail(ErrorKind::InvalidArgument, "a seed is required; there is no wall-clock default");
  if (lambda < 0.0) fail(ErrorKind::InvalidArgument, "lambda cannot be negative");
  if (epochs < 1) fail(ErrorKind::InvalidArgument, "at least one epoch is required");
  if (warmup_epochs < 0) fail(ErrorKind::InvalidArgument, "warmup epochs cannot be negative");
  if (learning_rate <= 0.0) fail(ErrorKind::InvalidArgument, "learning rate must be positive");
  if (weight_decay < 0.0) fail(ErrorKind::InvalidArgument, "weight decay cannot be negative");
  if (batch_size < 1) fail(ErrorKind::InvalidArgument, "batch size must be at least 1");
  if (min_npe_support < 0) fail(ErrorKind::InvalidArgument, "min support cannot be negative");
  if (k_folds < 2) fail(ErrorKind::InvalidArgument, "cross-validation needs at least 2 folds");
  if (threads < 1) fail(ErrorKind::InvalidArgument, "thread count must be at least 1");
}

Dataset remap_dataset(const Dataset& ds, LabelSpace& target) {
  Dataset out;
  out.sentences = ds.sentences;
  out.repaired_tags = ds.repaired_tags;
  out.embeddings = ds.embeddings;
  auto remap_tags = [&](std::vector<BioTag>& tags) {
    for (BioTag& t : tags)
      if (t.kind != BioTag::O) t.type = target.add(ds.labels.name(t.type));
  };
  for (Sentence& s : out.sentences) {
    remap_tags(s.observed);
    if (s.gold) remap_tags(*s.gold);
  }
  out.labels = target;
  return out;
}

std::vector<ScoredSpan> predict_entity_candidates(const Model& m, const Sentence& s,
                                                  const FileEmbeddings* file) {
  const int n = s.length();
  const int max_len = m.config().max_span_len;
  std::vector<std::pair<int, int>> spans;
  for (int i = 0; i < n; ++i) {
    int j_max = max_len <= 0 ? n - 1 : std::min(n - 1, i + max_len - 1);
    for (int j = i; j <= j_max; ++j) spans.emplace_back(i, j);
  }
  std::vector<std::vector<double>> probs = m.predict_spans(s, spans, file);
  const int o = m.labels().o_index();
  std::vector<ScoredSpan> out;
  for (std::size_t k = 0; k < spans.size(); ++k) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(probs[k].size()); ++c)
      if (probs[k][static_cast<std::size_t>(c)] > probs[k][static_cast<std::size_t>(best)])
        best = c;
    if (best != o)
      out.push_back(ScoredSpan{LabeledSpan{spans[k].first, spans[k].second, best},
                               probs[k][static_cast<std::size_t>(best)]});
  }
  return out;
}

std::vector<std::vector<BioTag>> predict_bio(const Model& m, const Dataset& ds,
                                             int threads) {
  std::vector<std::vector<BioTag>> out(ds.sentences.size());
  const FileEmbeddings* file = ds.embeddings.get();
  parallel_for(ds.sentences.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Sentence& s = ds.sentences[i];
      std::vector<LabeledSpan> kept = greedy_decode(predict_entity_candidates(m, s, file));
      out[i] = spans_to_bio(kept, s.length());
    }
  });
  return out;
}

namespace {

std::vector<std::vector<BioTag>> reference_tags(const Dataset& ds) {
  std::vector<std::vector<BioTag>> refs;
  refs.reserve(ds.sentences.size());
  for (const Sentence& s : ds.sentences) refs.push_back(s.gold ? *s.gold : s.observed);
  return refs;
}

}  // namespace

Prf evaluate_model(const Model& m, const Dataset& ds, int threads) {
  LabelSpace space = m.labels();
  Dataset ref = remap_dataset(ds, space);
  return entity_f1(predict_bio(m, ds, threads), reference_tags(ref));
}

Prf evaluate_model_token_level(const Model& m, const Dataset& ds, int threads) {
  LabelSpace space = m.labels();
  Dataset ref = remap_dataset(ds, space);
  return token_f1(predict_bio(m, ds, threads), reference_tags(ref));
}

std::vector<PositiveConfidence> positive_confidences(const Model& m, const Dataset& ds,
                                                     int threads) {
  std::vector<std::vector<PositiveConfidence>> per_sentence(ds.sentences.size());
  const FileEmbeddings* file = ds.embeddings.get();
  parallel_for(ds.sentences.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const Sentence& s = ds.sentences[idx];
      std::vector<LabeledSpan> positives = bio_to_spans(s.observed);
      if (positives.empty()) continue;
      std::vector<std::pair<int, int>> spans;
      spans.reserve(positives.size());
      for (const auto& p : positives) spans.emplace_back(p.start, p.end);
      std::vector<std::vector<double>> probs = m.predict_spans(s, spans, file);
      for (std::size_t k = 0; k < positives.size(); ++k) {
        int label = m.labels().find(ds.labels.name(positives[k].label));
        if (label < 0 || label == m.labels().o_index())
          fail(ErrorKind::InvalidArgument,
               "dataset label '" + ds.labels.name(positives[k].label) +
                   "' is unknown to the model");
        per_sentence[idx].push_back(PositiveConfidence{
            SpanKey{s.id, positives[k].start, positives[k].end}, label,
            probs[k][static_cast<std::size_t>(label)]});
      }
    }
  });
  std::vector<PositiveConfidence> out;
  for (auto& v : per_sentence)
    for (auto& p : v) out.push_back(std::move(p));
  return out;
}

namespace {

// Per-sentence working state: the span sets are fixed for the whole run, the
// prediction slots are refreshed by each full forward pass.
struct SentState {
  const Sentence* s = nullptr;
  std::vector<LabeledSpan> positives;            // training positives (exclusions applied)
  std::vector<std::pair<int, int>> negatives;    // boundaries exclude all observed positives
  std::vector<std::pair<int, int>> cross;
  std::vector<std::pair<int, int>> between;
  std::set<std::pair<int, int>> hidden;          // negatives that are really gold entities
  std::vector<double> pos_conf;                  // p(observed label), by positive index
  std::vector<int> neg_pred;                     // argmax class, by negative index
};

int argmax_class(const std::vector<double>& probs) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(probs.size()); ++c)
    if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(best)]) best = c;
  return best;
}

}  // namespace

TrainResult train(const Dataset& train_ds, const Dataset* dev_ds,
                  const TrainerConfig& cfg, const Exclusions* exclusions) {
  cfg.validate();

  // Model label space: training labels first, then any extra dev labels so
  // evaluation can express them.
  LabelSpace space = train_ds.labels;
  Dataset dev_remapped;
  if (dev_ds) dev_remapped = remap_dataset(*dev_ds, space);

  ModelConfig mcfg = cfg.model;
  const FileEmbeddings* file = nullptr;
  if (!mcfg.trainable_embeddings) {
    if (!train_ds.embeddings)
      fail(ErrorKind::InvalidArgument,
           "file-backed embeddings requested but the training set has none attached");
    file = train_ds.embeddings.get();
    mcfg.dim = file->dim();
  }

  // Working sentences with exclusions applied.
  std::vector<SentState> sents;
  std::int64_t total_positives = 0;
  std::int64_t n_ce_total = 0;
  bool gold_present = true;
  for (const Sentence& s : train_ds.sentences) {
    if (exclusions && exclusions->sentences.count(s.id)) continue;
    SentState st;
    st.s = &s;
    std::vector<LabeledSpan> observed = bio_to_spans(s.observed);
    for (const LabeledSpan& p : observed) {
      if (exclusions && exclusions->spans.count(SpanKey{s.id, p.start, p.end})) continue;
      st.positives.push_back(p);
    }
    st.negatives = enumerate_negatives(s.length(), observed, mcfg.max_span_len);
    partition_negatives(st.negatives, observed, st.cross, st.between);
    if (s.gold) {
      for (const auto& [i, j] : false_negative_spans(st.negatives, bio_to_spans(*s.gold)))
        st.hidden.emplace(i, j);
    } else {
      gold_present = false;
    }
    total_positives += static_cast<std::int64_t>(st.positives.size());
    n_ce_total += static_cast<std::int64_t>(st.cross.size());
    sents.push_back(std::move(st));
  }
  if (sents.empty())
    fail(ErrorKind::TrainingAbort, "no sentences left to train on");

  std::vector<std::string> vocab;
  if (mcfg.trainable_embeddings) {
    std::set<std::string> seen;
    for (const SentState& st : sents)
      for (const std::string& tok : st.s->tokens)
        if (seen.insert(tok).second) vocab.push_back(tok);
  }

  TrainResult result{Model::init(space, std::move(vocab), mcfg, cfg.seed),
                     {}, 0, "final", {}};
  Model& model = result.model;
  AdamW opt(model.params().size(), cfg.learning_rate, cfg.weight_decay);
  std::vector<double> grad(model.params().size(), 0.0);

  const int o_index = model.labels().o_index();
  const int num_labels = model.labels().size();

  // One forward pass over every positive and negative span, refreshing the
  // confidence slots. Selection for the next epoch and the diagnostics for
  // the one just finished both read from it.
  int pass_after_epoch = -1;  // epoch whose parameters produced the current pass
  auto run_full_pass = [&](int after_epoch) {
    parallel_for(sents.size(), cfg.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        SentState& st = sents[k];
        std::vector<std::pair<int, int>> spans;
        spans.reserve(st.positives.size() + st.negatives.size());
        for (const auto& p : st.positives) spans.emplace_back(p.start, p.end);
        for (const auto& ng : st.negatives) spans.push_back(ng);
        if (spans.empty()) continue;
        std::vector<std::vector<double>> probs = model.predict_spans(*st.s, spans, file);
        st.pos_conf.resize(st.positives.size());
        st.neg_pred.resize(st.negatives.size());
        for (std::size_t i = 0; i < st.positives.size(); ++i)
          st.pos_conf[i] = probs[i][static_cast<std::size_t>(st.positives[i].label)];
        for (std::size_t i = 0; i < st.negatives.size(); ++i)
          st.neg_pred[i] = argmax_class(probs[st.positives.size() + i]);
      }
    });
    pass_after_epoch = after_epoch;
  };

  double best_dev_f1 = -1.0;
  std::vector<double> best_theta;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const bool warmup = epoch <= cfg.warmup_epochs;
    EpochReport report;
    report.epoch = epoch;
    report.n_ce = n_ce_total;

    // Selection uses the predictions of the parameters entering this epoch.
    std::vector<std::vector<LabeledSpan>> p_hat(sents.size());
    std::vector<std::vector<std::pair<int, int>>> n_hat(sents.size());
    std::set<SpanKey> kept_keys;
    if (!warmup && (cfg.ues || cfg.npe)) {
      if (pass_after_epoch != epoch - 1) run_full_pass(epoch - 1);
      if (cfg.npe) {
        std::vector<PositiveConfidence> all_pos;
        for (const SentState& st : sents)
          for (std::size_t i = 0; i < st.positives.size(); ++i)
            all_pos.push_back(PositiveConfidence{
                SpanKey{st.s->id, st.positives[i].start, st.positives[i].end},
                st.positives[i].label, st.pos_conf[i]});
        LabelThresholds thresholds = label_mean_thresholds(all_pos, num_labels);
        std::vector<PositiveConfidence> kept =
            confident_positives(all_pos, thresholds, cfg.min_npe_support);
        if (total_positives > 0 && kept.empty())
          fail(ErrorKind::TrainingAbort,
               "positive selection dropped every span; the confidence thresholds "
               "pruned the corpus to nothing");
        for (const auto& p : kept) kept_keys.insert(p.key);
        result.npe_dropped.clear();
        for (const auto& p : all_pos)
          if (!kept_keys.count(p.key)) result.npe_dropped.push_back(p);
        for (int l = 0; l < num_labels; ++l) {
          std::size_t li = static_cast<std::size_t>(l);
          if (thresholds.mean_confidence[li] &&
              thresholds.support[li] >= cfg.min_npe_support)
            report.thresholds.emplace_back(result.model.labels().name(l),
                                           *thresholds.mean_confidence[li]);
        }
        report.p_hat = static_cast<std::int64_t>(kept.size());
      }
      if (cfg.ues) {
        std::int64_t n_hat_total = 0;
        for (std::size_t k = 0; k < sents.size(); ++k) {
          n_hat[k] = confident_negatives(sents[k].negatives, sents[k].neg_pred, o_index);
          n_hat_total += static_cast<std::int64_t>(n_hat[k].size());
        }
        report.n_hat = n_hat_total;
      }
    }
    for (std::size_t k = 0; k < sents.size(); ++k) {
      if (!warmup && cfg.npe) {
        for (const auto& p : sents[k].positives)
          if (kept_keys.count(SpanKey{sents[k].s->id, p.start, p.end}))
            p_hat[k].push_back(p);
      } else {
        p_hat[k] = sents[k].positives;
      }
    }

    // One pass over the corpus in a fresh deterministic order.
    std::vector<std::size_t> order(sents.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    {
      Rng rng(derive_seed(cfg.seed, Stream::Order, static_cast<std::uint64_t>(epoch)));
      rng.shuffle(order);
    }

    std::size_t cursor = 0;
    while (cursor < order.size()) {
      std::size_t batch_end = std::min(order.size(), cursor + static_cast<std::size_t>(cfg.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      std::int64_t batch_instances = 0;
      for (std::size_t b = cursor; b < batch_end; ++b) {
        std::size_t k = order[b];
        const SentState& st = sents[k];
        const std::uint64_t sid = static_cast<std::uint64_t>(st.s->id);
        const int budget = ceil_ratio(cfg.lambda, st.s->length());

        std::vector<std::pair<int, int>> sampled;
        bool clamped = false;
        if (warmup || !cfg.ues) {
          const auto& pool = (warmup && cfg.ues) ? st.cross : st.negatives;
          sampled = sample_uniform(pool, static_cast<std::size_t>(budget),
                                   derive_seed(cfg.seed, Stream::Sample,
                                               static_cast<std::uint64_t>(epoch), sid * 2),
                                   &clamped);
        } else {
          sampled = sample_uniform(n_hat[k], static_cast<std::size_t>(budget),
                                   derive_seed(cfg.seed, Stream::Sample,
                                               static_cast<std::uint64_t>(epoch), sid * 2),
                                   &clamped);
          if (sampled.size() < static_cast<std::size_t>(budget)) {
            // Not enough confident negatives: top up from the reliable pool.
            std::set<std::pair<int, int>> chosen(sampled.begin(), sampled.end());
            std::vector<std::pair<int, int>> backup;
            for (const auto& sp : st.cross)
              if (!chosen.count(sp)) backup.push_back(sp);
            bool clamped2 = false;
            std::vector<std::pair<int, int>> extra = sample_uniform(
                backup, static_cast<std::size_t>(budget) - sampled.size(),
                derive_seed(cfg.seed, Stream::Sample, static_cast<std::uint64_t>(epoch),
                            sid * 2 + 1),
                &clamped2);
            sampled.insert(sampled.end(), extra.begin(), extra.end());
            clamped = clamped || clamped2;
          }
        }
        if (clamped) report.sampling_clamped = true;

        std::vector<Model::Instance> instances;
        instances.reserve(p_hat[k].size() + sampled.size());
        for (const auto& p : p_hat[k])
          instances.push_back(Model::Instance{p.start, p.end, p.label});
        for (const auto& [i, j] : sampled)
          instances.push_back(Model::Instance{i, j, o_index});
        if (instances.empty()) continue;

        Rng dropout_rng(derive_seed(cfg.seed, Stream::Dropout,
                                    static_cast<std::uint64_t>(epoch), sid));
        report.loss += result.model.loss_and_grad(*st.s, instances, file, &dropout_rng, grad);
        batch_instances += static_cast<std::int64_t>(instances.size());
      }
      if (batch_instances > 0) opt.step(result.model.params(), grad);
      report.instances += batch_instances;
      cursor = batch_end;
    }

    // Post-epoch forward pass feeds both this report's diagnostics and the
    // next epoch's selection; skip it when neither will be read.
    bool next_needs_selection = epoch < cfg.epochs && epoch + 1 > cfg.warmup_epochs &&
                                (cfg.ues || cfg.npe);
    if (gold_present || next_needs_selection) run_full_pass(epoch);
    if (gold_present) {
      std::vector<NegativeOutcome> outcomes;
      for (const SentState& st : sents)
        for (std::size_t i = 0; i < st.negatives.size(); ++i)
          outcomes.push_back(NegativeOutcome{st.hidden.count(st.negatives[i]) > 0,
                                             st.neg_pred[i] != o_index});
      FnReport fn = fn_metrics(outcomes);
      report.fn_recall = fn.fn_recall;
      report.fn_precision = fn.fn_precision;
    }
    if (dev_ds) {
      report.dev = evaluate_model(result.model, dev_remapped, cfg.threads);
      if (report.dev->f1 > best_dev_f1) {
        best_dev_f1 = report.dev->f1;
        result.best_epoch = epoch;
        best_theta = result.model.params();
      }
    }
    result.reports.push_back(std::move(report));
  }

  if (dev_ds) {
    result.model.params() = best_theta;
    result.selection_basis = "dev_f1";
  } else {
    result.best_epoch = cfg.epochs;
    result.selection_basis = "final";
  }
  return result;
}

std::vector<JointExample> kfold_confidences(const Dataset& ds, const TrainerConfig& cfg,
                                            int k) {
  cfg.validate();
  if (k < 2) fail(ErrorKind::InvalidArgument, "cross-validation needs at least 2 folds");
  if (static_cast<int>(ds.sentences.size()) < k)
    fail(ErrorKind::InvalidArgument,
         "fewer sentences (" + std::to_string(ds.sentences.size()) + ") than folds (" +
             std::to_string(k) + ")");

  std::vector<std::size_t> order(ds.sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(cfg.seed, Stream::Folds));
  rng.shuffle(order);
  std::vector<int> fold_of(ds.sentences.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    fold_of[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));

  std::vector<JointExample> out;
  for (int f = 0; f < k; ++f) {
    Dataset sub;
    sub.labels = ds.labels;
    sub.embeddings = ds.embeddings;
    for (std::size_t i = 0; i < ds.sentences.size(); ++i)
      if (fold_of[i] != f) sub.sentences.push_back(ds.sentences[i]);

    TrainerConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, Stream::Folds, static_cast<std::uint64_t>(f) + 1);
    TrainResult r = train(sub, nullptr, fold_cfg);

    for (std::size_t i = 0; i < ds.sentences.size(); ++i) {
      if (fold_of[i] != f) continue;
      const Sentence& s = ds.sentences[i];
      std::vector<LabeledSpan> positives = bio_to_spans(s.observed);
      if (positives.empty()) continue;
      std::vector<std::pair<int, int>> spans;
      for (const auto& p : positives) spans.emplace_back(p.start, p.end);
      std::vector<std::vector<double>> probs =
          r.model.predict_spans(s, spans, ds.embeddings.get());
      for (std::size_t q = 0; q < positives.size(); ++q)
        out.push_back(JointExample{SpanKey{s.id, positives[q].start, positives[q].end},
                                   positives[q].label, std::move(probs[q])});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const JointExample& a, const JointExample& b) { return a.key < b.key; });
  return out;
}

TrainResult retrain_on_pruned(const Dataset& ds, const PruneDecision& decision,
                              const TrainerConfig& cfg, const Dataset* dev_ds) {
  Exclusions excl;
  if (decision.level == PruneLevel::Sentence) {
    excl.sentences.insert(decision.removed_sentences.begin(),
                          decision.removed_sentences.end());
  } else {
    excl.spans.insert(decision.removed_spans.begin(), decision.removed_spans.end());
  }
  return train(ds, dev_ds, cfg, &excl);
}

}  // namespace distner
