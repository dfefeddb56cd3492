#ifndef STACKSUM_EVAL_H_
#define STACKSUM_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stacksum/candidates.h"
#include "stacksum/rouge.h"

namespace stacksum {

// One method's choice for one document, with everything needed to
// re-aggregate it. `scores` are the method's own per-candidate scores
// (higher means preferred).
struct SelectionRecord {
  std::string doc_id;
  std::string method;
  std::size_t chosen = 0;
  RougeTriple chosen_rouge;
  std::vector<RougeTriple> candidate_rouge;
  std::vector<std::string> system_tags;
  std::vector<double> scores;

  // Throws unless chosen is in range and chosen_rouge matches the list.
  void validate() const;
};

// Builds a record from a rouge-attached set and per-candidate scores.
SelectionRecord make_selection(const CandidateSet& set, std::string method, std::size_t chosen,
                               std::vector<double> scores);

enum class OracleKind { kMin, kMax, kRandom };

std::string_view to_string(OracleKind kind);

// Min/Max by mean_f (lowest index on ties). Random draws one uniform score
// per candidate from a generator seeded by (seed, doc_id) and takes the
// argmax, i.e. a uniform choice that does not depend on document order.
SelectionRecord oracle_select(const CandidateSet& set, OracleKind kind, std::uint64_t seed = 0);

struct MethodRow {
  std::string method;
  double r1 = 0.0;  // mean F ×100
  double r2 = 0.0;
  double rl = 0.0;
  std::size_t documents = 0;
};

// Per-method mean ROUGE F ×100. Every method must cover the same doc_ids;
// otherwise throws listing the missing ids.
std::vector<MethodRow> corpus_report(
    const std::vector<std::pair<std::string, std::vector<SelectionRecord>>>& methods);

std::string render_corpus_report(const std::vector<MethodRow>& rows);
std::string corpus_report_csv(const std::vector<MethodRow>& rows);

struct BinReport {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::string> systems;
  double max_oracle = 0.0;  // mean ROUGE-1 F ×100 over documents
  double min_oracle = 0.0;
  double random = 0.0;
  double best_single = 0.0;
  std::string best_system;
  double method = 0.0;
};

struct BinAnalysis {
  std::vector<BinReport> bins;  // evaluated bins only
  std::size_t skipped_bins = 0;
  double success_rate = 0.0;
};

// Groups systems into [b, b + width) bins anchored at multiples of width by
// their mean ROUGE-1 (×100); system_means empty means "compute from the
// records". Within every bin holding two or more systems the method picks
// the member with the highest record score per document and is compared to
// the best single member. Oracles inside a bin are by ROUGE-1.
BinAnalysis bin_analysis(const std::vector<SelectionRecord>& records,
                         std::vector<std::pair<std::string, double>> system_means, double width,
                         std::uint64_t seed = 0);

std::string render_bin_analysis(const BinAnalysis& analysis);

struct GapOutcome {
  double gap = 0.0;
  bool correct = false;
};

struct BucketAccuracy {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
};

// Buckets [e_i, e_{i+1}) (the last one closed); empty buckets and zero gaps
// are left out. Edges must be strictly increasing.
std::vector<BucketAccuracy> selection_accuracy(std::span<const GapOutcome> outcomes,
                                               std::span<const double> edges);

// Gap between the best and second-best candidate by mean_f and whether the
// method took the best one. Records with fewer than two candidates are
// skipped. For two-candidate sets this is exactly the pairwise comparison.
std::vector<GapOutcome> gap_outcomes(const std::vector<SelectionRecord>& records);

std::string render_selection_accuracy(const std::vector<BucketAccuracy>& buckets);

// Paired two-sided approximate randomization test on per-document scores:
// p = (1 + #{trials with |mean(±d)| >= |mean(d)|}) / (trials + 1).
double significance(std::span<const double> a, std::span<const double> b, std::size_t trials,
                    std::uint64_t seed);

}  // namespace stacksum

#endif  // STACKSUM_EVAL_H_
