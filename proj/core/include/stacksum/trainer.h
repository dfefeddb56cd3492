#ifndef STACKSUM_TRAINER_H_
#define STACKSUM_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stacksum/candidates.h"
#include "stacksum/embedding.h"
#include "stacksum/params.h"
#include "stacksum/rouge.h"
#include "stacksum/text.h"

namespace stacksum {

enum class TrainMode { kPretrain, kFinetune, kSupervised };

std::string_view to_string(TrainMode mode);
TrainMode train_mode_from_string(std::string_view name);

struct TrainConfig {
  double lambda_c = 0.01;
  std::size_t warmup_steps = 10000;
  double lr_scale = 0.002;
  std::size_t max_steps = 1000;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  std::size_t eval_every = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  TrainMode mode = TrainMode::kPretrain;
  SortKey sort_key = SortKey::kMeanF;
  // Shape of a freshly initialized scorer (ignored when starting from init).
  HeadConfig head;

  void validate() const;
};

struct LossReport {
  double loss = 0.0;
  std::size_t violated_pairs = 0;
  std::size_t total_pairs = 0;
};

// Margin ranking loss over scores listed best-first by reference ROUGE:
//   L = Σ_i Σ_{j>i} max(0, s_j - s_i + (j - i)·lambda_c)
LossReport ranking_loss(std::span<const double> scores, double lambda_c);

// ∂L/∂s_k for the same loss (hinge subgradient 0 at the kink).
std::vector<double> ranking_loss_gradient(std::span<const double> scores, double lambda_c);

// lr = lr_scale · min(step^-0.5, step · warmup^-1.5); step starts at 1.
double lr_at(std::size_t step, const TrainConfig& config);

struct TrainingExample {
  Document document;
  CandidateSet candidates;  // rouge attached
};

struct LogRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double validation = std::numeric_limits<double>::quiet_NaN();
};

std::string to_json_line(const LogRecord& record);

struct TrainState {
  ScorerParams params;  // best-validation parameters
  ScorerParams first_moment;
  ScorerParams second_moment;
  std::size_t step = 0;  // last step taken
  std::size_t best_step = 0;
  double best_validation = -std::numeric_limits<double>::infinity();
  std::uint64_t rng_state = 0;
  std::vector<LogRecord> log;
};

// Mean, over documents, of the selected candidate's reference score under
// `key`.
double validation_score(const std::vector<TrainingExample>& examples, const ScorerParams& params,
                        const EmbeddingProvider& provider, SortKey key = SortKey::kMeanF);

// Adam with the warmup schedule on the per-batch mean ranking loss. The
// validation set is scored at step 0, every eval_every steps and at the end;
// the returned params are the best seen. An empty validation set means the
// training set is used. Deterministic for a given seed.
TrainState train(const std::vector<TrainingExample>& train_set,
                 const std::vector<TrainingExample>& validation_set, const TrainConfig& config,
                 const EmbeddingProvider& provider, const ScorerParams* init = nullptr);

struct Histogram {
  std::string name;
  std::vector<std::size_t> counts;
  double lower = 0.0;
  double upper = 1.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t total = 0;
};

// ROUGE-1 F distribution of all candidates (fixed-width bins over [0,1]).
Histogram distribution_report(const std::vector<CandidateSet>& sets, std::size_t bins = 20,
                              std::string name = {});

// Side-by-side plain-text table of several histograms.
std::string render_histograms(const std::vector<Histogram>& histograms);

}  // namespace stacksum

#endif  // STACKSUM_TRAINER_H_
