#include "stacksum/candidates.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>
#include <utility>

#include "stacksum/error.h"

namespace stacksum {
namespace {

using IndexTuple = std::vector<std::size_t>;

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<IndexTuple> combinations(std::size_t n, std::size_t k) {
  std::vector<IndexTuple> out;
  if (k == 0 || k > n) return out;
  IndexTuple idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.push_back(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

std::string tuple_label(std::string_view prefix, const IndexTuple& idx) {
  std::string s(prefix);
  s.push_back(':');
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(idx[i]);
  }
  return s;
}

std::set<std::string> trigram_keys(const Tokens& tokens) {
  std::set<std::string> keys;
  for (auto& [k, _] : ngram_counts(tokens, 3)) keys.insert(k);
  return keys;
}

}  // namespace

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::kEnumeration: return "enumeration";
    case Origin::kBeam: return "beam";
    case Origin::kMultiSystemSummary: return "multi_system_summary";
    case Origin::kMultiSystemSentence: return "multi_system_sentence";
    case Origin::kExternal: return "external";
  }
  return "external";
}

Origin origin_from_string(std::string_view name) {
  for (Origin o : {Origin::kEnumeration, Origin::kBeam, Origin::kMultiSystemSummary,
                   Origin::kMultiSystemSentence, Origin::kExternal}) {
    if (to_string(o) == name) return o;
  }
  throw Error("unknown candidate origin '" + std::string(name) + "'");
}

Candidate make_candidate(std::vector<Tokens> sentences, std::string system_tag,
                         std::optional<std::vector<std::size_t>> sentence_indices) {
  Candidate c;
  for (const auto& s : sentences) c.tokens.insert(c.tokens.end(), s.begin(), s.end());
  if (c.tokens.empty()) throw Error("empty candidate '" + system_tag + "'");
  if (sentence_indices) {
    for (std::size_t i = 1; i < sentence_indices->size(); ++i) {
      if ((*sentence_indices)[i] <= (*sentence_indices)[i - 1]) {
        throw Error("candidate sentence indices must be strictly increasing");
      }
    }
  }
  c.sentences = std::move(sentences);
  c.system_tag = std::move(system_tag);
  c.sentence_indices = std::move(sentence_indices);
  return c;
}

void deduplicate(CandidateSet& set) {
  std::unordered_set<std::string> seen;
  std::vector<Candidate> kept;
  kept.reserve(set.candidates.size());
  for (auto& c : set.candidates) {
    if (seen.insert(join(c.tokens, "\x1f")).second) kept.push_back(std::move(c));
  }
  set.candidates = std::move(kept);
}

CandidateSet enumerate_extractive(const Document& doc, const SentenceRanking& ranking,
                                  const EnumerationOptions& options) {
  if (options.sizes.empty()) throw Error("no combination sizes given");
  if (options.cap == 0) throw Error("candidate cap must be at least 1");
  const auto [min_it, max_it] = std::minmax_element(options.sizes.begin(), options.sizes.end());
  if (*min_it == 0) throw Error("combination size must be positive");
  if (options.top_n < *max_it) throw Error("top_n must be at least the largest combination size");
  if (ranking.scores.size() != doc.sentences.size()) {
    throw Error("sentence ranking has " + std::to_string(ranking.scores.size()) +
                " scores for " + std::to_string(doc.sentences.size()) + " sentences");
  }
  if (doc.sentences.size() < *min_it) throw Error("document too short");

  // Retained sentences: top_n by score, ties to the lower index, then put
  // back in document order.
  std::vector<std::size_t> order(doc.sentences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ranking.scores[a] > ranking.scores[b];
  });
  order.resize(std::min(options.top_n, order.size()));
  std::sort(order.begin(), order.end());

  struct Combo {
    IndexTuple indices;  // document sentence indices
    double score;
  };
  std::vector<Combo> combos;
  std::vector<std::size_t> sizes = options.sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  for (std::size_t size : sizes) {
    for (const auto& local : combinations(order.size(), size)) {
      Combo combo{{}, 0.0};
      for (std::size_t li : local) {
        combo.indices.push_back(order[li]);
        combo.score += ranking.scores[order[li]];
      }
      combos.push_back(std::move(combo));
    }
  }

  if (combos.size() > options.cap) {
    std::vector<std::size_t> rank(combos.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
      if (combos[a].score != combos[b].score) return combos[a].score > combos[b].score;
      return combos[a].indices < combos[b].indices;
    });
    rank.resize(options.cap);
    std::sort(rank.begin(), rank.end());
    std::vector<Combo> kept;
    for (std::size_t r : rank) kept.push_back(std::move(combos[r]));
    combos = std::move(kept);
  }

  CandidateSet set;
  set.doc_id = doc.doc_id;
  set.origin = Origin::kEnumeration;
  for (auto& combo : combos) {
    std::vector<Tokens> sentences;
    for (std::size_t i : combo.indices) sentences.push_back(doc.sentences[i].tokens);
    auto label = tuple_label("ext", combo.indices);
    set.candidates.push_back(
        make_candidate(std::move(sentences), std::move(label), std::move(combo.indices)));
  }
  deduplicate(set);
  return set;
}

InverseFrequency::InverseFrequency(const std::vector<Document>& corpus) {
  for (const auto& d : corpus) add(d);
}

void InverseFrequency::add(const Document& doc) {
  std::unordered_set<std::string> seen(doc.tokens.begin(), doc.tokens.end());
  for (const auto& t : seen) ++df_[t];
  ++documents_;
}

double InverseFrequency::weight(const std::string& token) const {
  const auto it = df_.find(token);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + documents_) / (1.0 + df)) + 1.0;
}

SentenceRanking heuristic_ranking(const Document& doc, const Tokens* reference,
                                  const InverseFrequency* idf, SortKey key) {
  const std::size_t n = doc.sentences.size();
  SentenceRanking ranking;
  ranking.scores.assign(n, 0.0);
  if (n == 0) return ranking;

  if (reference == nullptr) {
    InverseFrequency local;
    if (idf == nullptr) {
      for (const auto& s : doc.sentences) local.add(make_document({}, {s.tokens}));
      idf = &local;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& t : doc.sentences[i].tokens) ranking.scores[i] += idf->weight(t);
    }
    return ranking;
  }

  if (reference->empty()) throw Error("empty reference");
  std::vector<bool> taken(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    double best_value = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      Tokens rendered;
      for (std::size_t j = 0; j < n; ++j) {
        if (taken[j] || j == i) {
          rendered.insert(rendered.end(), doc.sentences[j].tokens.begin(),
                          doc.sentences[j].tokens.end());
        }
      }
      const double value = sort_value(rouge_triple(rendered, *reference), key);
      if (value > best_value) {
        best_value = value;
        best = i;
      }
    }
    taken[best] = true;
    ranking.scores[best] = static_cast<double>(n - step);
  }
  return ranking;
}

CandidateSet ingest_beam(std::string doc_id, std::vector<BeamOutput> outputs,
                         std::size_t beam_size) {
  if (outputs.empty()) throw Error("no beam outputs");
  if (beam_size == 0) throw Error("beam size must be at least 1");
  std::stable_sort(outputs.begin(), outputs.end(),
                   [](const BeamOutput& a, const BeamOutput& b) { return a.rank < b.rank; });
  for (std::size_t i = 1; i < outputs.size(); ++i) {
    if (outputs[i].rank == outputs[i - 1].rank) {
      throw Error("duplicate beam rank " + std::to_string(outputs[i].rank));
    }
  }
  if (outputs.size() > beam_size) outputs.resize(beam_size);

  CandidateSet set;
  set.doc_id = std::move(doc_id);
  set.origin = Origin::kBeam;
  for (auto& out : outputs) {
    set.candidates.push_back(
        make_candidate(std::move(out.sentences), "beam:" + std::to_string(out.rank)));
  }
  deduplicate(set);
  return set;
}

CandidateSet pool_systems(std::string doc_id, std::vector<SystemOutput> per_system) {
  if (per_system.size() < 2) throw Error("nothing to combine");
  CandidateSet set;
  set.doc_id = std::move(doc_id);
  set.origin = Origin::kMultiSystemSummary;
  for (auto& s : per_system) {
    set.candidates.push_back(make_candidate(std::move(s.sentences), std::move(s.system_tag)));
  }
  deduplicate(set);
  return set;
}

bool shares_trigram(const Tokens& a, const Tokens& b) {
  const auto ka = trigram_keys(a);
  for (const auto& k : trigram_keys(b)) {
    if (ka.count(k)) return true;
  }
  return false;
}

CandidateSet fuse_sentences(std::string doc_id,
                            const std::vector<std::vector<Tokens>>& per_system_sentences,
                            std::size_t m, std::size_t cap) {
  if (m < 2) throw Error("fusion needs at least 2 sentences per candidate");
  std::vector<Tokens> pool;
  std::unordered_set<std::string> seen;
  for (const auto& system : per_system_sentences) {
    for (const auto& s : system) {
      if (s.empty()) continue;
      if (seen.insert(join(s, "\x1f")).second) pool.push_back(s);
    }
  }
  if (pool.size() < m) {
    throw Error("sentence pool of " + std::to_string(pool.size()) + " is smaller than m=" +
                std::to_string(m));
  }

  std::vector<std::set<std::string>> trigrams;
  trigrams.reserve(pool.size());
  for (const auto& s : pool) trigrams.push_back(trigram_keys(s));
  auto blocked = [&](std::size_t a, std::size_t b) {
    for (const auto& k : trigrams[b]) {
      if (trigrams[a].count(k)) return true;
    }
    return false;
  };
  std::vector<std::vector<bool>> conflict(pool.size(), std::vector<bool>(pool.size(), false));
  for (std::size_t a = 0; a < pool.size(); ++a) {
    for (std::size_t b = a + 1; b < pool.size(); ++b) conflict[a][b] = conflict[b][a] = blocked(a, b);
  }

  CandidateSet set;
  set.doc_id = std::move(doc_id);
  set.origin = Origin::kMultiSystemSentence;
  for (const auto& idx : combinations(pool.size(), m)) {
    bool ok = true;
    for (std::size_t i = 0; i < idx.size() && ok; ++i) {
      for (std::size_t j = i + 1; j < idx.size() && ok; ++j) ok = !conflict[idx[i]][idx[j]];
    }
    if (!ok) continue;
    std::vector<Tokens> sentences;
    for (std::size_t i : idx) sentences.push_back(pool[i]);
    set.candidates.push_back(make_candidate(std::move(sentences), tuple_label("fuse", idx)));
    if (cap != 0 && set.candidates.size() == cap) break;
  }
  deduplicate(set);
  if (set.candidates.empty()) throw Error("no candidate survives tri-gram blocking");
  return set;
}

CandidateSet attach_rouge(CandidateSet set, const Tokens& reference, SortKey key) {
  if (reference.empty()) throw Error("empty reference");
  for (auto& c : set.candidates) c.rouge = rouge_triple(c.tokens, reference);
  std::stable_sort(set.candidates.begin(), set.candidates.end(),
                   [key](const Candidate& a, const Candidate& b) {
                     return sort_value(*a.rouge, key) > sort_value(*b.rouge, key);
                   });
  return set;
}

}  // namespace stacksum
