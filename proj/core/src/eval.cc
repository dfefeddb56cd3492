#include "stacksum/eval.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "stacksum/embedding.h"
#include "stacksum/error.h"
#include "stacksum/scorer.h"

namespace stacksum {
namespace {

std::uint64_t doc_seed(std::uint64_t seed, std::string_view doc_id) {
  return seed * 0x9e3779b97f4a7c15ULL ^ fnv1a(doc_id);
}

std::string fixed2(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

}  // namespace

void SelectionRecord::validate() const {
  if (candidate_rouge.empty()) throw Error("selection for '" + doc_id + "' has no candidates");
  if (chosen >= candidate_rouge.size()) {
    throw Error("selection for '" + doc_id + "' chose index " + std::to_string(chosen) +
                " of " + std::to_string(candidate_rouge.size()));
  }
  const auto& c = candidate_rouge[chosen];
  if (c.mean_f != chosen_rouge.mean_f || c.r1.f1 != chosen_rouge.r1.f1 ||
      c.r2.f1 != chosen_rouge.r2.f1 || c.rl.f1 != chosen_rouge.rl.f1) {
    throw Error("selection for '" + doc_id + "' has inconsistent chosen ROUGE");
  }
  if (!system_tags.empty() && system_tags.size() != candidate_rouge.size()) {
    throw Error("selection for '" + doc_id + "' has mismatched system tags");
  }
  if (!scores.empty() && scores.size() != candidate_rouge.size()) {
    throw Error("selection for '" + doc_id + "' has mismatched scores");
  }
}

SelectionRecord make_selection(const CandidateSet& set, std::string method, std::size_t chosen,
                               std::vector<double> scores) {
  SelectionRecord r;
  r.doc_id = set.doc_id;
  r.method = std::move(method);
  r.chosen = chosen;
  for (const auto& c : set.candidates) {
    if (!c.rouge) throw Error("candidate '" + c.system_tag + "' has no reference ROUGE");
    r.candidate_rouge.push_back(*c.rouge);
    r.system_tags.push_back(c.system_tag);
  }
  r.scores = std::move(scores);
  if (chosen < r.candidate_rouge.size()) r.chosen_rouge = r.candidate_rouge[chosen];
  r.validate();
  return r;
}

std::string_view to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::kMin: return "oracle-min";
    case OracleKind::kMax: return "oracle-max";
    case OracleKind::kRandom: return "random";
  }
  return "random";
}

SelectionRecord oracle_select(const CandidateSet& set, OracleKind kind, std::uint64_t seed) {
  if (set.candidates.empty()) throw Error("empty candidate set");
  std::vector<double> scores;
  std::uint64_t state = doc_seed(seed, set.doc_id);
  for (const auto& c : set.candidates) {
    if (!c.rouge) throw Error("candidate '" + c.system_tag + "' has no reference ROUGE");
    switch (kind) {
      case OracleKind::kMax: scores.push_back(c.rouge->mean_f); break;
      case OracleKind::kMin: scores.push_back(-c.rouge->mean_f); break;
      case OracleKind::kRandom: scores.push_back(uniform01(state)); break;
    }
  }
  const auto chosen = argmax(scores);
  return make_selection(set, std::string(to_string(kind)), chosen, std::move(scores));
}

std::vector<MethodRow> corpus_report(
    const std::vector<std::pair<std::string, std::vector<SelectionRecord>>>& methods) {
  std::vector<MethodRow> rows;
  if (methods.empty()) return rows;
  std::set<std::string> all_ids;
  for (const auto& [_, records] : methods) {
    for (const auto& r : records) all_ids.insert(r.doc_id);
  }
  std::string problems;
  for (const auto& [name, records] : methods) {
    std::set<std::string> ids;
    for (const auto& r : records) {
      if (!ids.insert(r.doc_id).second) problems += "\n  " + name + ": duplicate " + r.doc_id;
    }
    for (const auto& id : all_ids) {
      if (!ids.count(id)) problems += "\n  " + name + ": missing " + id;
    }
  }
  if (!problems.empty()) throw Error("doc_id mismatch between methods:" + problems);

  for (const auto& [name, records] : methods) {
    MethodRow row;
    row.method = name;
    row.documents = records.size();
    // Sum in doc_id order so the result does not depend on record order.
    std::map<std::string, const SelectionRecord*> by_id;
    for (const auto& r : records) by_id[r.doc_id] = &r;
    for (const auto& [_, r] : by_id) {
      row.r1 += r->chosen_rouge.r1.f1;
      row.r2 += r->chosen_rouge.r2.f1;
      row.rl += r->chosen_rouge.rl.f1;
    }
    if (row.documents) {
      const double scale = 100.0 / static_cast<double>(row.documents);
      row.r1 *= scale;
      row.r2 *= scale;
      row.rl *= scale;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_corpus_report(const std::vector<MethodRow>& rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.method.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "method" << std::right
      << std::setw(8) << "R-1" << std::setw(8) << "R-2" << std::setw(8) << "R-L"
      << std::setw(7) << "docs" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.method << std::right
        << std::setw(8) << fixed2(r.r1) << std::setw(8) << fixed2(r.r2) << std::setw(8)
        << fixed2(r.rl) << std::setw(7) << r.documents << '\n';
  }
  return out.str();
}

std::string corpus_report_csv(const std::vector<MethodRow>& rows) {
  std::string out = "method,r1,r2,rl,docs\n";
  for (const auto& r : rows) {
    out += r.method + "," + fixed2(r.r1) + "," + fixed2(r.r2) + "," + fixed2(r.rl) + "," +
           std::to_string(r.documents) + "\n";
  }
  return out;
}

BinAnalysis bin_analysis(const std::vector<SelectionRecord>& records,
                         std::vector<std::pair<std::string, double>> system_means, double width,
                         std::uint64_t seed) {
  if (!(width > 0.0)) throw Error("bin width must be positive");
  if (records.empty()) throw Error("no selection records");

  // Position of every system tag inside each record.
  std::vector<std::map<std::string, std::size_t>> position(records.size());
  for (std::size_t d = 0; d < records.size(); ++d) {
    const auto& r = records[d];
    r.validate();
    if (r.system_tags.empty()) throw Error("record '" + r.doc_id + "' has no system tags");
    for (std::size_t i = 0; i < r.system_tags.size(); ++i) position[d][r.system_tags[i]] = i;
  }
  auto r1_of = [&](std::size_t d, const std::string& tag) {
    const auto it = position[d].find(tag);
    if (it == position[d].end()) {
      throw Error("system '" + tag + "' missing from document '" + records[d].doc_id + "'");
    }
    return records[d].candidate_rouge[it->second].r1.f1;
  };

  const auto& first_tags = records.front().system_tags;
  std::map<std::string, double> data_mean;
  for (const auto& tag : first_tags) {
    double sum = 0.0;
    for (std::size_t d = 0; d < records.size(); ++d) sum += r1_of(d, tag);
    data_mean[tag] = 100.0 * sum / static_cast<double>(records.size());
  }
  if (system_means.empty()) {
    for (const auto& tag : first_tags) system_means.emplace_back(tag, data_mean[tag]);
  }
  if (system_means.empty()) throw Error("nothing to combine");

  double lowest = system_means.front().second;
  for (const auto& [_, m] : system_means) lowest = std::min(lowest, m);
  const double anchor = std::floor(lowest / width) * width;
  std::map<long long, std::vector<std::string>> members;
  for (const auto& [tag, m] : system_means) {
    const auto bin = static_cast<long long>(std::floor((m - anchor) / width + 1e-9));
    members[bin].push_back(tag);
  }

  BinAnalysis out;
  std::size_t successes = 0;
  for (const auto& [bin, tags] : members) {
    if (tags.size() < 2) {
      ++out.skipped_bins;
      continue;
    }
    BinReport rep;
    rep.lower = anchor + static_cast<double>(bin) * width;
    rep.upper = rep.lower + width;
    rep.systems = tags;
    double best_mean = -1.0;
    for (const auto& t : tags) {
      if (!data_mean.count(t)) throw Error("system '" + t + "' has no records");
      if (data_mean[t] > best_mean) {
        best_mean = data_mean[t];
        rep.best_system = t;
      }
    }
    rep.best_single = best_mean;
    for (std::size_t d = 0; d < records.size(); ++d) {
      std::vector<double> r1;
      std::vector<double> method_scores;
      for (const auto& t : tags) {
        r1.push_back(r1_of(d, t));
        const auto pos = position[d].at(t);
        method_scores.push_back(records[d].scores.empty() ? 0.0 : records[d].scores[pos]);
      }
      rep.max_oracle += *std::max_element(r1.begin(), r1.end());
      rep.min_oracle += *std::min_element(r1.begin(), r1.end());
      std::uint64_t state = doc_seed(seed, records[d].doc_id) ^ static_cast<std::uint64_t>(bin);
      rep.random += r1[static_cast<std::size_t>(splitmix64(state) % r1.size())];
      rep.method += r1[argmax(method_scores)];
    }
    const double scale = 100.0 / static_cast<double>(records.size());
    rep.max_oracle *= scale;
    rep.min_oracle *= scale;
    rep.random *= scale;
    rep.method *= scale;
    if (rep.method > rep.best_single) ++successes;
    out.bins.push_back(std::move(rep));
  }
  if (out.bins.empty()) throw Error("nothing to combine");
  out.success_rate = static_cast<double>(successes) / static_cast<double>(out.bins.size());
  return out;
}

std::string render_bin_analysis(const BinAnalysis& analysis) {
  std::ostringstream out;
  out << std::setw(15) << "bin" << std::setw(6) << "n" << std::setw(9) << "max"
      << std::setw(9) << "min" << std::setw(9) << "random" << std::setw(9) << "best"
      << std::setw(9) << "method" << '\n';
  for (const auto& b : analysis.bins) {
    out << std::setw(15) << (fixed2(b.lower) + "-" + fixed2(b.upper)) << std::setw(6)
        << b.systems.size() << std::setw(9) << fixed2(b.max_oracle) << std::setw(9)
        << fixed2(b.min_oracle) << std::setw(9) << fixed2(b.random) << std::setw(9)
        << fixed2(b.best_single) << std::setw(9) << fixed2(b.method) << '\n';
  }
  out << "success rate: " << fixed2(analysis.success_rate) << " over " << analysis.bins.size()
      << " bins (" << analysis.skipped_bins << " single-system bins skipped)\n";
  return out.str();
}

std::vector<BucketAccuracy> selection_accuracy(std::span<const GapOutcome> outcomes,
                                               std::span<const double> edges) {
  if (edges.size() < 2) throw Error("need at least two bucket edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw Error("bucket edges must be strictly increasing");
  }
  std::vector<BucketAccuracy> buckets(edges.size() - 1);
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    buckets[b].lower = edges[b];
    buckets[b].upper = edges[b + 1];
  }
  for (const auto& o : outcomes) {
    if (o.gap == 0.0) continue;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
      const bool last = b + 1 == buckets.size();
      if (o.gap >= buckets[b].lower && (o.gap < buckets[b].upper || (last && o.gap == buckets[b].upper))) {
        ++buckets[b].total;
        if (o.correct) ++buckets[b].correct;
        break;
      }
    }
  }
  std::vector<BucketAccuracy> out;
  for (auto& b : buckets) {
    if (b.total == 0) continue;
    b.accuracy = static_cast<double>(b.correct) / static_cast<double>(b.total);
    out.push_back(b);
  }
  return out;
}

std::vector<GapOutcome> gap_outcomes(const std::vector<SelectionRecord>& records) {
  std::vector<GapOutcome> out;
  for (const auto& r : records) {
    if (r.candidate_rouge.size() < 2) continue;
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.candidate_rouge.size(); ++i) {
      if (r.candidate_rouge[i].mean_f > r.candidate_rouge[best].mean_f) best = i;
    }
    double second = -1.0;
    for (std::size_t i = 0; i < r.candidate_rouge.size(); ++i) {
      if (i != best) second = std::max(second, r.candidate_rouge[i].mean_f);
    }
    const double top = r.candidate_rouge[best].mean_f;
    out.push_back({top - second, r.candidate_rouge[r.chosen].mean_f == top});
  }
  return out;
}

std::string render_selection_accuracy(const std::vector<BucketAccuracy>& buckets) {
  std::ostringstream out;
  out << std::setw(15) << "gap" << std::setw(9) << "correct" << std::setw(8) << "total"
      << std::setw(10) << "accuracy" << '\n';
  for (const auto& b : buckets) {
    std::ostringstream range;
    range << std::setprecision(3) << b.lower << "-" << b.upper;
    out << std::setw(15) << range.str() << std::setw(9) << b.correct << std::setw(8) << b.total
        << std::setw(10) << fixed2(b.accuracy) << '\n';
  }
  return out.str();
}

double significance(std::span<const double> a, std::span<const double> b, std::size_t trials,
                    std::uint64_t seed) {
  if (a.size() != b.size()) {
    throw Error("score lists differ in length: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  }
  if (a.size() < 2) throw Error("significance needs at least two paired scores");
  std::vector<double> diff(a.size());
  double observed = 0.0;
  double magnitude = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff[i] = a[i] - b[i];
    observed += diff[i];
    magnitude += std::abs(diff[i]);
  }
  observed = std::abs(observed);
  const double tolerance = 1e-12 * magnitude;

  std::uint64_t state = seed ^ 0x2545f4914f6cdd1dULL;
  std::size_t at_least = 1;  // the identity assignment
  for (std::size_t t = 0; t < trials; ++t) {
    double sum = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < diff.size(); ++i) {
      if (i % 64 == 0) bits = splitmix64(state);
      sum += (bits & 1U) ? -diff[i] : diff[i];
      bits >>= 1U;
    }
    if (std::abs(sum) >= observed - tolerance) ++at_least;
  }
  return static_cast<double>(at_least) / static_cast<double>(trials + 1);
}

}  // namespace stacksum
