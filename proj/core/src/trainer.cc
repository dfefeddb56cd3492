#include "stacksum/trainer.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "stacksum/error.h"
#include "stacksum/scorer.h"

namespace stacksum {
namespace {

// Provider rows cached per example; they do not depend on the parameters.
struct CachedExample {
  const TrainingExample* example;
  ProvidedRows document;
  std::vector<EmbeddingMatrix> candidates;
};

std::vector<CachedExample> cache_embeddings(const std::vector<TrainingExample>& examples,
                                            const EmbeddingProvider& provider, std::size_t dim) {
  std::vector<CachedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    if (ex.candidates.candidates.empty()) {
      throw Error("document '" + ex.document.doc_id + "' has no candidates");
    }
    CachedExample c{&ex, provider.lookup(document_key(ex.document.doc_id), ex.document.tokens,
                                         TextKind::kDocument),
                    {}};
    if (c.document.rows.dim() != dim) {
      throw Error("dimension mismatch for document '" + ex.document.doc_id + "'");
    }
    for (const auto& cand : ex.candidates.candidates) {
      if (!cand.rouge) {
        throw Error("candidate '" + cand.system_tag + "' of document '" + ex.document.doc_id +
                    "' has no reference ROUGE");
      }
      c.candidates.push_back(embed_candidate(candidate_key(ex.candidates.doc_id, cand.system_tag),
                                             cand.tokens, provider, dim));
    }
    out.push_back(std::move(c));
  }
  return out;
}

DocumentEmbedding assemble(const CachedExample& c, const ScorerParams& params) {
  if (c.document.includes_global) return {c.document.rows, true};
  const auto& rows = c.document.rows.values();
  Matrix m(rows.rows() + 1, rows.cols());
  m.row(0) = params.global_slot.row(0);
  m.bottomRows(rows.rows()) = rows;
  return {EmbeddingMatrix(std::move(m)), false};
}

// Candidate order, best-first by reference score (stable).
std::vector<std::size_t> rouge_order(const CandidateSet& set, SortKey key) {
  std::vector<std::size_t> order(set.candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sort_value(*set.candidates[a].rouge, key) > sort_value(*set.candidates[b].rouge, key);
  });
  return order;
}

double evaluate(const std::vector<CachedExample>& cached, const ScorerParams& params, SortKey key) {
  if (cached.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : cached) {
    const auto doc = assemble(c, params);
    DocumentScorer scorer(params, doc);
    std::vector<double> scores;
    for (const auto& emb : c.candidates) scores.push_back(scorer.score(emb).score);
    total += sort_value(*c.example->candidates.candidates[argmax(scores)].rouge, key);
  }
  return total / static_cast<double>(cached.size());
}

void adam_update(ScorerParams& params, ScorerParams& m, ScorerParams& v, const ScorerParams& grads,
                 const TrainConfig& config, std::size_t step, double lr) {
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  auto tp = params.tensors();
  auto tm = m.tensors();
  auto tv = v.tensors();
  const auto tg = grads.tensors();
  for (std::size_t t = 0; t < tp.size(); ++t) {
    auto& p = *tp[t].second;
    auto& mm = *tm[t].second;
    auto& vv = *tv[t].second;
    const auto& g = *tg[t].second;
    mm = config.beta1 * mm + (1.0 - config.beta1) * g;
    vv = config.beta2 * vv + (1.0 - config.beta2) * g.cwiseProduct(g);
    p.array() -= lr * (mm.array() / bc1) / ((vv.array() / bc2).sqrt() + config.eps);
  }
}

}  // namespace

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kPretrain: return "pretrain";
    case TrainMode::kFinetune: return "finetune";
    case TrainMode::kSupervised: return "supervised";
  }
  return "pretrain";
}

TrainMode train_mode_from_string(std::string_view name) {
  if (name == "pretrain") return TrainMode::kPretrain;
  if (name == "finetune") return TrainMode::kFinetune;
  if (name == "supervised") return TrainMode::kSupervised;
  throw Error("unknown training mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(lambda_c >= 0.0)) throw Error("lambda_c must be nonnegative");
  if (warmup_steps < 1) throw Error("warmup_steps must be at least 1");
  if (!(lr_scale > 0.0)) throw Error("lr_scale must be positive");
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error("optimizer betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw Error("optimizer eps must be positive");
}

LossReport ranking_loss(std::span<const double> scores, double lambda_c) {
  LossReport r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = i + 1; j < scores.size(); ++j) {
      const double term = scores[j] - scores[i] + static_cast<double>(j - i) * lambda_c;
      ++r.total_pairs;
      if (term > 0.0) {
        r.loss += term;
        ++r.violated_pairs;
      }
    }
  }
  return r;
}

std::vector<double> ranking_loss_gradient(std::span<const double> scores, double lambda_c) {
  std::vector<double> g(scores.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = i + 1; j < scores.size(); ++j) {
      if (scores[j] - scores[i] + static_cast<double>(j - i) * lambda_c > 0.0) {
        g[j] += 1.0;
        g[i] -= 1.0;
      }
    }
  }
  return g;
}

double lr_at(std::size_t step, const TrainConfig& config) {
  if (step == 0) throw Error("learning-rate step must start at 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(config.warmup_steps);
  return config.lr_scale * std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

std::string to_json_line(const LogRecord& record) {
  nlohmann::ordered_json j;
  j["step"] = record.step;
  j["lr"] = record.lr;
  j["loss"] = std::isfinite(record.loss) ? nlohmann::ordered_json(record.loss) : nullptr;
  j["validation"] =
      std::isfinite(record.validation) ? nlohmann::ordered_json(record.validation) : nullptr;
  return j.dump();
}

double validation_score(const std::vector<TrainingExample>& examples, const ScorerParams& params,
                        const EmbeddingProvider& provider, SortKey key) {
  return evaluate(cache_embeddings(examples, provider, params.dim), params, key);
}

TrainState train(const std::vector<TrainingExample>& train_set,
                 const std::vector<TrainingExample>& validation_set, const TrainConfig& config,
                 const EmbeddingProvider& provider, const ScorerParams* init) {
  config.validate();
  if (train_set.empty()) throw Error("training set is empty");
  if (config.mode == TrainMode::kFinetune && init == nullptr) {
    throw Error("finetune mode needs an initial checkpoint");
  }
  if (config.mode == TrainMode::kSupervised && init != nullptr) {
    throw Error("supervised mode trains from scratch; no initial checkpoint allowed");
  }

  TrainState state;
  state.params = init ? *init : ScorerParams::initialize(config.head, config.seed);
  state.params.validate();
  if (provider.dim() != state.params.dim) {
    throw Error("dimension mismatch: provider " + std::to_string(provider.dim()) + ", scorer " +
                std::to_string(state.params.dim));
  }
  state.first_moment = state.params.zeros_like();
  state.second_moment = state.params.zeros_like();
  state.rng_state = config.seed ^ 0xa0761d6478bd642fULL;

  const auto train_cache = cache_embeddings(train_set, provider, state.params.dim);
  const auto val_cache = validation_set.empty()
                             ? train_cache
                             : cache_embeddings(validation_set, provider, state.params.dim);

  ScorerParams params = state.params;
  state.best_validation = evaluate(val_cache, params, config.sort_key);
  state.best_step = 0;
  state.log.push_back({0, 0.0, std::numeric_limits<double>::quiet_NaN(), state.best_validation});

  std::vector<std::size_t> order(train_cache.size());
  std::size_t cursor = order.size();
  auto reshuffle = [&] {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(splitmix64(state.rng_state) % i);
      std::swap(order[i - 1], order[j]);
    }
    cursor = 0;
  };

  const std::size_t batch = std::min(config.batch_size, train_cache.size());
  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    ScorerParams grads = params.zeros_like();
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) reshuffle();
      const auto& c = train_cache[order[cursor++]];
      const auto doc = assemble(c, params);
      DocumentScorer scorer(params, doc);
      const auto ranked = rouge_order(c.example->candidates, config.sort_key);
      std::vector<double> scores;
      std::vector<ScoreBreakdown> breakdowns;
      for (std::size_t idx : ranked) {
        breakdowns.push_back(scorer.score(c.candidates[idx]));
        scores.push_back(breakdowns.back().score);
      }
      loss_sum += ranking_loss(scores, config.lambda_c).loss;
      const auto g = ranking_loss_gradient(scores, config.lambda_c);
      for (std::size_t r = 0; r < ranked.size(); ++r) {
        if (g[r] == 0.0) continue;
        scorer.backward_candidate(c.candidates[ranked[r]], breakdowns[r],
                                  g[r] / static_cast<double>(batch), grads);
      }
      scorer.backward_document(grads);
    }
    const double loss = loss_sum / static_cast<double>(batch);
    if (!std::isfinite(loss)) throw Error("training diverged at step " + std::to_string(step));
    try {
      check_finite(grads);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " at step " + std::to_string(step));
    }

    const double lr = lr_at(step, config);
    adam_update(params, state.first_moment, state.second_moment, grads, config, step, lr);
    state.step = step;

    LogRecord record{step, lr, loss, std::numeric_limits<double>::quiet_NaN()};
    const bool eval_now =
        step == config.max_steps || (config.eval_every != 0 && step % config.eval_every == 0);
    if (eval_now) {
      record.validation = evaluate(val_cache, params, config.sort_key);
      if (record.validation > state.best_validation) {
        state.best_validation = record.validation;
        state.best_step = step;
        state.params = params;
      }
    }
    state.log.push_back(record);
  }
  return state;
}

Histogram distribution_report(const std::vector<CandidateSet>& sets, std::size_t bins,
                              std::string name) {
  if (bins == 0) throw Error("histogram needs at least one bin");
  Histogram h;
  h.name = std::move(name);
  h.counts.assign(bins, 0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& set : sets) {
    for (const auto& c : set.candidates) {
      if (!c.rouge) throw Error("candidate without reference ROUGE in distribution report");
      const double v = std::clamp(c.rouge->r1.f1, 0.0, 1.0);
      const auto bin = std::min(static_cast<std::size_t>(v * static_cast<double>(bins)), bins - 1);
      ++h.counts[bin];
      sum += v;
      sum_sq += v * v;
      ++h.total;
    }
  }
  if (h.total) {
    h.mean = sum / static_cast<double>(h.total);
    h.stddev = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(h.total) - h.mean * h.mean));
  }
  return h;
}

std::string render_histograms(const std::vector<Histogram>& histograms) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::setw(13) << "bin";
  for (const auto& h : histograms) out << std::setw(14) << (h.name.empty() ? "set" : h.name);
  out << '\n';
  const std::size_t bins = histograms.empty() ? 0 : histograms.front().counts.size();
  for (std::size_t b = 0; b < bins; ++b) {
    const double width = 1.0 / static_cast<double>(bins);
    std::ostringstream label;
    label << std::fixed << std::setprecision(2) << b * width << "-" << (b + 1) * width;
    out << std::setw(13) << label.str();
    for (const auto& h : histograms) {
      const double frac = h.total ? static_cast<double>(h.counts[b]) / h.total : 0.0;
      out << std::setw(14) << frac;
    }
    out << '\n';
  }
  out << std::setw(13) << "mean";
  for (const auto& h : histograms) out << std::setw(14) << h.mean;
  out << '\n' << std::setw(13) << "std";
  for (const auto& h : histograms) out << std::setw(14) << h.stddev;
  out << '\n' << std::setw(13) << "n";
  for (const auto& h : histograms) out << std::setw(14) << h.total;
  out << '\n';
  return out.str();
}

}  // namespace stacksum
