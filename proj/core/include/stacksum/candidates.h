#ifndef STACKSUM_CANDIDATES_H_
#define STACKSUM_CANDIDATES_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stacksum/rouge.h"
#include "stacksum/text.h"

namespace stacksum {

enum class Origin { kEnumeration, kBeam, kMultiSystemSummary, kMultiSystemSentence, kExternal };

std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view name);

struct Candidate {
  // Sentence segmentation of the candidate; `tokens` is their concatenation.
  std::vector<Tokens> sentences;
  Tokens tokens;
  // Source-sentence indices, strictly increasing (extractive candidates only).
  std::optional<std::vector<std::size_t>> sentence_indices;
  // System name plus decoding label, e.g. "beam:2", "ext:0,3", "bart".
  std::string system_tag;
  std::optional<RougeTriple> rouge;
};

Candidate make_candidate(std::vector<Tokens> sentences, std::string system_tag,
                         std::optional<std::vector<std::size_t>> sentence_indices = std::nullopt);

struct CandidateSet {
  std::string doc_id;
  std::vector<Candidate> candidates;
  Origin origin = Origin::kExternal;

  std::size_t size() const { return candidates.size(); }
};

// Drops later candidates whose token sequence repeats an earlier one.
void deduplicate(CandidateSet& set);

// Per-sentence salience used to prune sentences before enumeration.
struct SentenceRanking {
  std::vector<double> scores;
};

struct EnumerationOptions {
  std::vector<std::size_t> sizes = {2, 3};
  std::size_t top_n = 5;
  std::size_t cap = 20;
};

// Keeps the top_n sentences by score (ties to the lower index), emits every
// combination whose size is in `sizes` rendered in document order, and when
// more than `cap` exist keeps those with the highest summed score (ties to
// the lexicographically smaller index tuple). Output order is by size, then
// index tuple.
CandidateSet enumerate_extractive(const Document& doc, const SentenceRanking& ranking,
                                  const EnumerationOptions& options = {});

// Corpus-level inverse document frequency.
class InverseFrequency {
 public:
  InverseFrequency() = default;
  explicit InverseFrequency(const std::vector<Document>& corpus);

  void add(const Document& doc);
  double weight(const std::string& token) const;
  std::size_t documents() const { return documents_; }

 private:
  std::unordered_map<std::string, std::size_t> df_;
  std::size_t documents_ = 0;
};

// Reference mode (reference != nullptr): greedy ROUGE oracle; the first
// sentence picked scores n, the next n-1, and so on. Unsupervised mode: sum
// of inverse-frequency weights over the sentence tokens, with the sentences
// of `doc` itself standing in for the corpus when `idf` is null.
SentenceRanking heuristic_ranking(const Document& doc, const Tokens* reference,
                                  const InverseFrequency* idf = nullptr,
                                  SortKey key = SortKey::kMeanF);

struct BeamOutput {
  int rank = 0;
  std::vector<Tokens> sentences;
};

// Keeps the beam_size lowest ranks, ordered by rank, deduplicated.
CandidateSet ingest_beam(std::string doc_id, std::vector<BeamOutput> outputs,
                         std::size_t beam_size);

struct SystemOutput {
  std::string system_tag;
  std::vector<Tokens> sentences;
};

CandidateSet pool_systems(std::string doc_id, std::vector<SystemOutput> per_system);

// True when the two token lists share at least one identical trigram.
bool shares_trigram(const Tokens& a, const Tokens& b);

// Pools every system's sentences (exact duplicates merged), enumerates all
// m-subsets in pool order and removes subsets in which two sentences share a
// trigram. cap == 0 keeps every survivor; otherwise the first cap in
// enumeration order are kept.
CandidateSet fuse_sentences(std::string doc_id,
                            const std::vector<std::vector<Tokens>>& per_system_sentences,
                            std::size_t m, std::size_t cap = 0);

// Fills rouge on every candidate and stable-sorts descending by `key`.
CandidateSet attach_rouge(CandidateSet set, const Tokens& reference,
                          SortKey key = SortKey::kMeanF);

}  // namespace stacksum

#endif  // STACKSUM_CANDIDATES_H_
