// stacksum: batch pipeline for candidate generation, scorer training,
// reranking and evaluation. Exit codes: 0 ok, 1 data error, 2 usage error.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stacksum/candidates.h"
#include "stacksum/embedding.h"
#include "stacksum/error.h"
#include "stacksum/eval.h"
#include "stacksum/features.h"
#include "stacksum/io.h"
#include "stacksum/ranker.h"
#include "stacksum/scorer.h"
#include "stacksum/text.h"
#include "stacksum/trainer.h"

namespace {

using namespace stacksum;
using json = nlohmann::ordered_json;

constexpr int kDataError = 1;
constexpr int kUsageError = 2;

// Bad flag combinations discovered after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t default_jobs() {
  if (const char* env = std::getenv("STACKSUM_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring STACKSUM_JOBS='" << env << "'\n";
  }
  return 1;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write into
// slot i only, so results keep input order.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Per-document outcome: an output line or an error message.
struct Slot {
  std::string line;
  std::string error;
};

int write_slots(const std::vector<Slot>& slots, const std::vector<std::string>& ids,
                const std::string& output) {
  std::string out;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].error.empty()) {
      std::cerr << "skipped " << ids[i] << ": " << slots[i].error << '\n';
      ++failed;
      continue;
    }
    out += slots[i].line;
    out.push_back('\n');
  }
  write_file(output, out);
  if (failed) {
    std::cerr << failed << " of " << slots.size() << " documents skipped\n";
    return kDataError;
  }
  return 0;
}

std::vector<Tokens> split_sentences(const std::string& text) {
  std::vector<Tokens> out;
  for (auto& s : tokenize(text).sentences) out.push_back(std::move(s.tokens));
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(item, &pos);
      if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("bad size list '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty size list");
  return out;
}

std::vector<double> parse_edges(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad bucket edges '" + text + "'");
    }
  }
  return out;
}

SortKey parse_sort_key(const std::string& name) {
  return name == "r1" ? SortKey::kRouge1 : SortKey::kMeanF;
}

// ---- generate-candidates --------------------------------------------------

struct GenerateOptions {
  std::string input;
  std::string output;
  std::string mode;
  std::string sizes = "2,3";
  std::size_t top_n = 5;
  std::size_t cap = 20;
  std::string ranking = "auto";
  std::size_t beam_size = 4;
  std::string system;
  std::size_t m = 2;
  std::size_t fuse_cap = 0;
  std::string sort_key = "mean_f";
  std::size_t jobs = 1;
};

CandidateSet generate_one(const DatasetRecord& record, const Document& doc,
                          const std::optional<Tokens>& reference, const InverseFrequency& idf,
                          const GenerateOptions& o, const EnumerationOptions& enum_options) {
  if (o.mode == "enumerate") {
    SentenceRanking ranking;
    if (o.ranking == "scores" || (o.ranking == "auto" && record.sentence_scores)) {
      if (!record.sentence_scores) throw Error("no sentence_scores");
      ranking.scores = *record.sentence_scores;
    } else if (o.ranking == "oracle") {
      if (!reference) throw Error("oracle ranking needs a reference");
      ranking = heuristic_ranking(doc, &*reference, nullptr, parse_sort_key(o.sort_key));
    } else {
      ranking = heuristic_ranking(doc, nullptr, &idf);
    }
    return enumerate_extractive(doc, ranking, enum_options);
  }
  if (record.systems.empty()) throw Error("no system outputs");
  if (o.mode == "beam") {
    const auto* chosen = &record.systems.front();
    if (!o.system.empty()) {
      chosen = nullptr;
      for (const auto& s : record.systems) {
        if (s.first == o.system) chosen = &s;
      }
      if (!chosen) throw Error("system '" + o.system + "' not present");
    }
    std::vector<BeamOutput> outputs;
    for (std::size_t r = 0; r < chosen->second.size(); ++r) {
      outputs.push_back({static_cast<int>(r), split_sentences(chosen->second[r])});
    }
    return ingest_beam(record.doc_id, std::move(outputs), o.beam_size);
  }
  if (o.mode == "pool") {
    std::vector<SystemOutput> outputs;
    for (const auto& [tag, outs] : record.systems) {
      if (!outs.empty()) outputs.push_back({tag, split_sentences(outs.front())});
    }
    return pool_systems(record.doc_id, std::move(outputs));
  }
  std::vector<std::vector<Tokens>> per_system;
  for (const auto& [tag, outs] : record.systems) {
    if (!outs.empty()) per_system.push_back(split_sentences(outs.front()));
  }
  return fuse_sentences(record.doc_id, per_system, o.m, o.fuse_cap);
}

int run_generate(const GenerateOptions& o) {
  const auto records = read_dataset(o.input);
  EnumerationOptions enum_options;
  enum_options.sizes = parse_sizes(o.sizes);
  enum_options.top_n = o.top_n;
  enum_options.cap = o.cap;
  const auto key = parse_sort_key(o.sort_key);

  // Tokenization happens up front so the corpus statistics are available to
  // every document.
  std::vector<std::optional<Document>> docs(records.size());
  std::vector<Slot> slots(records.size());
  InverseFrequency idf;
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      docs[i] = tokenize_sentences(records[i].sentences, {}, records[i].doc_id);
      idf.add(*docs[i]);
    } catch (const Error& e) {
      slots[i].error = e.what();
    }
  }
  parallel_for(records.size(), o.jobs, [&](std::size_t i) {
    if (!docs[i]) return;
    try {
      const auto& record = records[i];
      std::optional<Tokens> reference;
      if (record.reference) {
        reference = tokenize_words(*record.reference);
        if (reference->empty()) throw Error("empty reference");
      }
      auto set = generate_one(record, *docs[i], reference, idf, o, enum_options);
      if (reference) set = attach_rouge(std::move(set), *reference, key);
      slots[i].line = to_json_line(CandidateRecord{*docs[i], reference, std::move(set)});
    } catch (const Error& e) {
      slots[i].error = e.what();
    }
  });
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.doc_id);
  return write_slots(slots, ids, o.output);
}

// ---- shared loading -------------------------------------------------------

// Fills missing reference ROUGE in place; candidate order is kept.
void ensure_rouge(CandidateRecord& record) {
  const bool complete = std::all_of(record.set.candidates.begin(), record.set.candidates.end(),
                                    [](const Candidate& c) { return c.rouge.has_value(); });
  if (complete) return;
  if (!record.reference) {
    throw Error("document '" + record.set.doc_id + "' has neither reference nor ROUGE");
  }
  for (auto& c : record.set.candidates) c.rouge = rouge_triple(c.tokens, *record.reference);
}

std::vector<CandidateRecord> load_candidates(const std::string& path) {
  auto records = read_candidate_records(path);
  for (auto& r : records) ensure_rouge(r);
  return records;
}

std::vector<TrainingExample> to_examples(std::vector<CandidateRecord> records) {
  std::vector<TrainingExample> out;
  for (auto& r : records) out.push_back({std::move(r.document), std::move(r.set)});
  return out;
}

struct ProviderOptions {
  std::string embeddings;
  std::size_t dim = 64;
  std::uint64_t provider_seed = 7;
};

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& embeddings, std::size_t dim,
                                                 std::uint64_t seed) {
  if (!embeddings.empty()) {
    return std::make_unique<StoredEmbeddingProvider>(read_embedding_file(embeddings));
  }
  return std::make_unique<HashEmbeddingProvider>(dim, seed);
}

// ---- train ----------------------------------------------------------------

struct TrainOptions {
  std::string candidates;
  std::string validation;
  std::string mode = "pretrain";
  std::string init;
  std::string config;
  std::string out_checkpoint;
  std::string log;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_steps;
  ProviderOptions provider;
};

int run_train(const TrainOptions& o) {
  TrainConfig config;
  if (!o.config.empty()) config = parse_train_config(read_file(o.config));
  config.mode = train_mode_from_string(o.mode);
  if (o.seed) config.seed = *o.seed;
  if (o.max_steps) config.max_steps = *o.max_steps;
  config.validate();

  std::optional<Checkpoint> init;
  if (config.mode == TrainMode::kFinetune && o.init.empty()) {
    throw UsageError("finetune mode requires --init");
  }
  if (config.mode == TrainMode::kSupervised && !o.init.empty()) {
    throw UsageError("supervised mode trains from scratch; drop --init");
  }
  if (!o.init.empty()) init = load_checkpoint(o.init);

  auto train_set = to_examples(load_candidates(o.candidates));
  std::vector<TrainingExample> validation_set;
  if (!o.validation.empty()) {
    validation_set = to_examples(load_candidates(o.validation));
  } else if (train_set.size() >= 5) {
    const std::size_t held = std::max<std::size_t>(1, train_set.size() / 5);
    validation_set.assign(std::make_move_iterator(train_set.end() - static_cast<long>(held)),
                          std::make_move_iterator(train_set.end()));
    train_set.resize(train_set.size() - held);
  }

  CheckpointMetadata meta;
  meta.seed = config.seed;
  meta.mode = std::string(to_string(config.mode));
  meta.provider = o.provider.embeddings.empty() ? "hash" : "file";
  meta.provider_seed = o.provider.provider_seed;
  std::size_t dim = config.head.dim;
  if (init) {
    dim = init->params.dim;
    if (o.provider.embeddings.empty() && init->metadata.provider == "hash") {
      meta.provider_seed = init->metadata.provider_seed;
    }
  }
  const auto provider = make_provider(o.provider.embeddings, dim, meta.provider_seed);
  if (provider->dim() != dim) {
    throw Error("dimension mismatch: embeddings have " + std::to_string(provider->dim()) +
                ", scorer expects " + std::to_string(dim));
  }

  const auto state =
      train(train_set, validation_set, config, *provider, init ? &init->params : nullptr);
  meta.step = state.best_step;
  meta.validation = state.best_validation;
  save_checkpoint(o.out_checkpoint, Checkpoint{state.params, meta});

  std::string log;
  for (const auto& rec : state.log) log += to_json_line(rec) + "\n";
  write_file(o.log.empty() ? o.out_checkpoint + ".log.jsonl" : o.log, log);
  std::cout << "trained " << meta.mode << " for " << state.step << " steps; best validation "
            << state.best_validation << " at step " << state.best_step << '\n';
  return 0;
}

// ---- rerank ---------------------------------------------------------------

struct RerankOptions {
  std::string candidates;
  std::string method;
  std::string checkpoint;
  std::string ranker;
  std::string output;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  ProviderOptions provider;
};

Matrix raw_rows(const EmbeddingProvider& provider, const std::string& key, const Tokens& tokens,
                TextKind kind) {
  auto provided = provider.lookup(key, tokens, kind);
  const Matrix& m = provided.rows.values();
  if (provided.includes_global) return m.bottomRows(m.rows() - 1);
  return m;
}

int run_rerank(const RerankOptions& o) {
  std::optional<Checkpoint> checkpoint;
  std::optional<LinearRanker> ranker;
  if (o.method == "refactor") {
    if (o.checkpoint.empty()) throw UsageError("method refactor requires --checkpoint");
    if (!std::filesystem::exists(o.checkpoint)) {
      throw UsageError("checkpoint not found: " + o.checkpoint);
    }
    checkpoint = load_checkpoint(o.checkpoint);
  } else if (o.method == "ranksvm-like") {
    if (o.ranker.empty()) throw UsageError("method ranksvm-like requires --ranker");
    if (!std::filesystem::exists(o.ranker)) throw UsageError("ranker not found: " + o.ranker);
    ranker = decode_ranker(read_file(o.ranker));
  }

  std::unique_ptr<EmbeddingProvider> provider;
  if (checkpoint) {
    const bool hashed = o.provider.embeddings.empty();
    if (hashed && checkpoint->metadata.provider != "hash") {
      throw UsageError("checkpoint was trained on stored embeddings; pass --embeddings");
    }
    provider = make_provider(o.provider.embeddings, checkpoint->params.dim,
                             checkpoint->metadata.provider_seed);
  } else if (o.method == "bertscore-like") {
    provider = make_provider(o.provider.embeddings, o.provider.dim, o.provider.provider_seed);
  }

  const auto records = load_candidates(o.candidates);
  std::vector<Slot> slots(records.size());
  parallel_for(records.size(), o.jobs, [&](std::size_t i) {
    const auto& record = records[i];
    const auto& set = record.set;
    try {
      SelectionRecord selection;
      if (o.method == "refactor") {
        const auto chosen = select(record.document, set, checkpoint->params, *provider);
        std::vector<double> scores;
        for (const auto& s : chosen.scores) scores.push_back(s.score);
        selection = make_selection(set, o.method, chosen.chosen, std::move(scores));
      } else if (o.method == "bertscore-like") {
        const Matrix doc = raw_rows(*provider, document_key(set.doc_id), record.document.tokens,
                                    TextKind::kDocument);
        std::vector<Matrix> cands;
        for (const auto& c : set.candidates) {
          cands.push_back(raw_rows(*provider, candidate_key(set.doc_id, c.system_tag), c.tokens,
                                   TextKind::kCandidate));
        }
        std::vector<double> scores;
        const auto chosen = unsupervised_select(doc, cands, &scores);
        selection = make_selection(set, o.method, chosen, std::move(scores));
      } else if (o.method == "ranksvm-like") {
        std::vector<FeatureVector> features;
        std::vector<double> scores;
        for (const auto& c : set.candidates) {
          features.push_back(extract_features(record.document, c));
          scores.push_back(ranker->score(features.back()));
        }
        selection = make_selection(set, o.method, rank_with(*ranker, features), std::move(scores));
      } else {
        const OracleKind kind = o.method == "oracle-min"   ? OracleKind::kMin
                                : o.method == "oracle-max" ? OracleKind::kMax
                                                           : OracleKind::kRandom;
        selection = oracle_select(set, kind, o.seed);
      }
      slots[i].line = to_json_line(selection);
    } catch (const Error& e) {
      slots[i].error = e.what();
    }
  });
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.set.doc_id);
  return write_slots(slots, ids, o.output);
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateOptions {
  std::vector<std::string> selections;
  std::string report;
  std::string csv;
  std::string json_path;
  std::optional<double> bins;
  std::string buckets = "0,0.02,0.05,0.1,0.2,1.0";
  std::vector<std::string> significance;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
};

json bucket_json(const std::vector<BucketAccuracy>& buckets) {
  json out = json::array();
  for (const auto& b : buckets) {
    out.push_back({{"lower", b.lower},
                   {"upper", b.upper},
                   {"correct", b.correct},
                   {"total", b.total},
                   {"accuracy", b.accuracy}});
  }
  return out;
}

int run_evaluate(const EvaluateOptions& o) {
  const auto edges = parse_edges(o.buckets);
  std::vector<std::pair<std::string, std::vector<SelectionRecord>>> methods;
  std::set<std::string> labels;
  for (const auto& path : o.selections) {
    auto records = read_selections(path);
    if (records.empty()) throw Error(path + ": no selections");
    std::string label = records.front().method;
    for (const auto& r : records) {
      if (r.method != label) throw Error(path + ": mixes methods " + label + " and " + r.method);
    }
    // The same method may be passed twice (e.g. two seeds); keep rows apart.
    for (int n = 2; labels.count(label); ++n) label = records.front().method + "#" + std::to_string(n);
    labels.insert(label);
    methods.emplace_back(label, std::move(records));
  }

  const auto rows = corpus_report(methods);
  std::ostringstream text;
  json report;
  text << "== corpus report (mean F x100)\n" << render_corpus_report(rows);
  report["methods"] = json::array();
  for (const auto& r : rows) {
    report["methods"].push_back(
        {{"method", r.method}, {"r1", r.r1}, {"r2", r.r2}, {"rl", r.rl}, {"documents", r.documents}});
  }

  report["selection_accuracy"] = json::object();
  for (const auto& [label, records] : methods) {
    const auto outcomes = gap_outcomes(records);
    const auto buckets = selection_accuracy(outcomes, edges);
    text << "\n== selection accuracy: " << label << '\n' << render_selection_accuracy(buckets);
    report["selection_accuracy"][label] = bucket_json(buckets);
  }

  if (o.bins) {
    if (*o.bins <= 0.0) throw UsageError("--bins width must be positive");
    report["bins"] = json::object();
    for (const auto& [label, records] : methods) {
      const auto analysis = bin_analysis(records, {}, *o.bins, o.seed);
      text << "\n== bins (width " << *o.bins << "): " << label << '\n'
           << render_bin_analysis(analysis);
      json bins = json::array();
      for (const auto& b : analysis.bins) {
        bins.push_back({{"lower", b.lower},
                        {"upper", b.upper},
                        {"systems", b.systems},
                        {"max_oracle", b.max_oracle},
                        {"min_oracle", b.min_oracle},
                        {"random", b.random},
                        {"best_single", b.best_single},
                        {"best_system", b.best_system},
                        {"method", b.method}});
      }
      report["bins"][label] = {{"bins", bins},
                               {"skipped_bins", analysis.skipped_bins},
                               {"success_rate", analysis.success_rate}};
    }
  }

  if (!o.significance.empty()) {
    text << "\n== significance (paired approximate randomization, mean F, " << o.trials
         << " trials)\n";
    report["significance"] = json::array();
    std::map<std::string, std::map<std::string, double>> per_doc;
    for (const auto& [label, records] : methods) {
      for (const auto& r : records) per_doc[label][r.doc_id] = r.chosen_rouge.mean_f;
    }
    for (const auto& pair : o.significance) {
      const auto comma = pair.find(',');
      if (comma == std::string::npos) throw UsageError("--significance expects A,B");
      const std::string a = pair.substr(0, comma);
      const std::string b = pair.substr(comma + 1);
      for (const auto& name : {a, b}) {
        if (!per_doc.count(name)) throw UsageError("unknown method '" + name + "'");
      }
      std::vector<double> xs, ys;
      for (const auto& [id, v] : per_doc[a]) {
        xs.push_back(v);
        ys.push_back(per_doc[b].at(id));
      }
      const double p = significance(xs, ys, o.trials, o.seed);
      text << a << " vs " << b << ": p = " << p << '\n';
      report["significance"].push_back({{"a", a}, {"b", b}, {"p", p}});
    }
  }

  if (o.report.empty()) {
    std::cout << text.str();
  } else {
    write_file(o.report, text.str());
  }
  if (!o.csv.empty()) write_file(o.csv, corpus_report_csv(rows));
  if (!o.json_path.empty()) write_file(o.json_path, report.dump(1) + "\n");
  return 0;
}

// ---- fit-ranker / features / distribution ---------------------------------

std::vector<RankingList> ranking_lists(const std::vector<CandidateRecord>& records, SortKey key) {
  std::vector<RankingList> lists;
  for (const auto& r : records) {
    RankingList list;
    for (const auto& c : r.set.candidates) {
      list.features.push_back(extract_features(r.document, c));
      list.quality.push_back(sort_value(*c.rouge, key));
    }
    lists.push_back(std::move(list));
  }
  return lists;
}

int run_fit_ranker(const std::string& candidates, const std::string& output,
                   const std::string& sort_key, const RankerOptions& options) {
  const auto lists = ranking_lists(load_candidates(candidates), parse_sort_key(sort_key));
  const auto ranker = fit_ranker_cv(lists, options);
  write_file(output, encode_ranker(ranker));
  std::cout << "fitted ranker with c = " << ranker.c << '\n';
  return 0;
}

int run_features(const std::string& candidates, const std::string& output) {
  std::string out = "doc_id,system_tag," + feature_csv_header() + ",mean_f\n";
  for (const auto& r : load_candidates(candidates)) {
    for (const auto& c : r.set.candidates) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", c.rouge->mean_f);
      out += r.set.doc_id + "," + c.system_tag + "," +
             feature_csv_row(extract_features(r.document, c)) + "," + buf + "\n";
    }
  }
  if (output.empty()) {
    std::cout << out;
  } else {
    write_file(output, out);
  }
  return 0;
}

int run_distribution(const std::vector<std::string>& paths, std::size_t bins) {
  std::vector<Histogram> histograms;
  for (const auto& path : paths) {
    std::vector<CandidateSet> sets;
    for (auto& r : load_candidates(path)) sets.push_back(std::move(r.set));
    histograms.push_back(
        distribution_report(sets, bins, std::filesystem::path(path).filename().string()));
  }
  std::cout << render_histograms(histograms);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Candidate generation, scorer training, reranking and evaluation for summaries"};
  app.require_subcommand(1);
  const std::size_t jobs = default_jobs();

  GenerateOptions gen;
  gen.jobs = jobs;
  auto* generate = app.add_subcommand("generate-candidates", "Build candidate sets from a dataset");
  generate->add_option("--input", gen.input, "Dataset JSONL")->required();
  generate->add_option("--output", gen.output, "Candidate JSONL")->required();
  generate->add_option("--mode", gen.mode)
      ->required()
      ->check(CLI::IsMember({"enumerate", "beam", "pool", "fuse"}));
  generate->add_option("--sizes", gen.sizes, "Comma-separated subset sizes (enumerate)");
  generate->add_option("--top-n", gen.top_n, "Sentences kept before enumeration");
  generate->add_option("--cap", gen.cap, "Maximum enumerated candidates per document");
  generate->add_option("--ranking", gen.ranking, "Sentence ranking for enumeration")
      ->check(CLI::IsMember({"auto", "scores", "oracle", "idf"}));
  generate->add_option("--beam-size", gen.beam_size, "Beam ranks kept (beam)");
  generate->add_option("--system", gen.system, "System whose beam is ingested (beam)");
  generate->add_option("--m", gen.m, "Sentences per fused candidate (fuse)");
  generate->add_option("--fuse-cap", gen.fuse_cap, "Maximum fused candidates, 0 = all (fuse)");
  generate->add_option("--sort-key", gen.sort_key)->check(CLI::IsMember({"mean_f", "r1"}));
  generate->add_option("--jobs", gen.jobs, "Worker threads (default $STACKSUM_JOBS or 1)")
      ->check(CLI::PositiveNumber);

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train the scorer with the margin ranking loss");
  train_cmd->add_option("--candidates", tr.candidates, "Training candidate JSONL")->required();
  train_cmd->add_option("--validation", tr.validation, "Validation candidate JSONL");
  train_cmd->add_option("--mode", tr.mode)
      ->check(CLI::IsMember({"pretrain", "finetune", "supervised"}));
  train_cmd->add_option("--init", tr.init, "Checkpoint to start from (finetune)");
  train_cmd->add_option("--config", tr.config, "Training config JSON");
  train_cmd->add_option("--out-checkpoint", tr.out_checkpoint)->required();
  train_cmd->add_option("--log", tr.log, "Training log JSONL (default <checkpoint>.log.jsonl)");
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--max-steps", tr.max_steps);
  train_cmd->add_option("--embeddings", tr.provider.embeddings, "Precomputed embedding file");
  train_cmd->add_option("--provider-seed", tr.provider.provider_seed,
                        "Seed of the hashed token embeddings");

  RerankOptions rr;
  rr.jobs = jobs;
  auto* rerank = app.add_subcommand("rerank", "Select one candidate per document");
  rerank->add_option("--candidates", rr.candidates)->required();
  rerank->add_option("--method", rr.method)
      ->required()
      ->check(CLI::IsMember(
          {"refactor", "bertscore-like", "ranksvm-like", "oracle-min", "oracle-max", "random"}));
  rerank->add_option("--checkpoint", rr.checkpoint);
  rerank->add_option("--ranker", rr.ranker);
  rerank->add_option("--output", rr.output)->required();
  rerank->add_option("--seed", rr.seed);
  rerank->add_option("--embeddings", rr.provider.embeddings);
  rerank->add_option("--dim", rr.provider.dim, "Hashed embedding width (bertscore-like)");
  rerank->add_option("--provider-seed", rr.provider.provider_seed);
  rerank->add_option("--jobs", rr.jobs)->check(CLI::PositiveNumber);

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Aggregate selections into reports");
  evaluate->add_option("--selections", ev.selections, "Selection JSONL, one per method")
      ->required();
  evaluate->add_option("--report", ev.report, "Text report (default stdout)");
  evaluate->add_option("--csv", ev.csv);
  evaluate->add_option("--json", ev.json_path);
  evaluate->add_option("--bins", ev.bins, "Bin width in ROUGE-1 points");
  evaluate->add_option("--buckets", ev.buckets, "Comma-separated gap bucket edges");
  evaluate->add_option("--significance", ev.significance, "Method pair A,B");
  evaluate->add_option("--trials", ev.trials)->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", ev.seed);

  std::string fit_candidates, fit_output, fit_key = "mean_f";
  RankerOptions ranker_options;
  auto* fit = app.add_subcommand("fit-ranker", "Fit the pairwise feature ranker");
  fit->add_option("--candidates", fit_candidates)->required();
  fit->add_option("--output", fit_output)->required();
  fit->add_option("--sort-key", fit_key)->check(CLI::IsMember({"mean_f", "r1"}));
  fit->add_option("--folds", ranker_options.folds)->check(CLI::Range(2, 100));
  fit->add_option("--iterations", ranker_options.iterations)->check(CLI::PositiveNumber);

  std::string feat_candidates, feat_output;
  auto* features = app.add_subcommand("features", "Dump candidate features as CSV");
  features->add_option("--candidates", feat_candidates)->required();
  features->add_option("--output", feat_output);

  std::vector<std::string> dist_paths;
  std::size_t dist_bins = 20;
  auto* distribution = app.add_subcommand("distribution", "ROUGE-1 histograms of candidate files");
  distribution->add_option("--candidates", dist_paths)->required();
  distribution->add_option("--bins", dist_bins)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*train_cmd) return run_train(tr);
    if (*rerank) return run_rerank(rr);
    if (*evaluate) return run_evaluate(ev);
    if (*fit) return run_fit_ranker(fit_candidates, fit_output, fit_key, ranker_options);
    if (*features) return run_features(feat_candidates, feat_output);
    if (*distribution) return run_distribution(dist_paths, dist_bins);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
