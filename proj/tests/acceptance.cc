// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "planted.h"
#include "scorer_fixtures.h"
#include "stacksum/candidates.h"
#include "stacksum/error.h"
#include "stacksum/eval.h"
#include "stacksum/features.h"
#include "stacksum/io.h"
#include "stacksum/rouge.h"
#include "stacksum/scorer.h"
#include "stacksum/trainer.h"

namespace fs = std::filesystem;
using namespace stacksum;
using namespace stacksum::testing;

namespace {

// Collects failures inside one criterion; the first few are echoed.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_ < 5) std::cout << "    " << what << "\n";
    ++failures_;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream os;
    os.precision(10);
    os << what << ": got " << got << ", want " << want << " ± " << tol;
    expect(std::abs(got - want) <= tol, os.str());
  }
  void note(const std::string& text) { notes_ += (notes_.empty() ? "" : "; ") + text; }

  std::size_t failures() const { return failures_; }
  const std::string& notes() const { return notes_; }

 private:
  std::size_t failures_ = 0;
  std::string notes_;
};

struct Outcome {
  std::string id;
  bool passed;
};

Outcome run(const std::string& id, const std::string& title, double limit_seconds,
            const std::function<void(Checker&)>& body) {
  Checker c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (seconds > limit_seconds) c.expect(false, "runtime " + std::to_string(seconds) + " s over limit");
  const bool ok = c.failures() == 0;
  std::printf("[%s] %s %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", id.c_str(), title.c_str(), seconds,
              c.notes().empty() ? "" : " | ", c.notes().c_str());
  std::fflush(stdout);
  return {id, ok};
}

Tokens toks(std::initializer_list<const char*> list) { return Tokens(list.begin(), list.end()); }

Tokens random_tokens(std::mt19937& rng, std::size_t max_len, std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> len(1, max_len), word(0, vocab - 1);
  Tokens out;
  for (std::size_t i = len(rng); i > 0; --i) out.push_back(std::string(1, static_cast<char>('a' + word(rng))));
  return out;
}

// ---------------------------------------------------------------------------

void rouge_oracle(Checker& c) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto cand = random_tokens(rng, 8, 5), ref = random_tokens(rng, 8, 5);
    for (std::size_t n : {1u, 2u}) {
      const auto got = rouge_n(cand, ref, n);
      const auto want = brute_rouge_n(cand, ref, n);
      c.expect(got.precision == want.p && got.recall == want.r && got.f1 == want.f,
               "rouge_n mismatch at trial " + std::to_string(trial));
    }
    const auto l = rouge_l(cand, ref);
    const auto lcs = static_cast<double>(brute_lcs(cand, ref));
    const auto want = prf(lcs, static_cast<double>(cand.size()), static_cast<double>(ref.size()));
    c.expect(l.precision == want.p && l.recall == want.r && l.f1 == want.f,
             "rouge_l mismatch at trial " + std::to_string(trial));
  }
  c.near(rouge_n(toks({"the", "cat", "sat", "on", "the", "mat"}), toks({"the", "cat", "sat"}), 1).f1, 0.6667,
         1e-4, "unigram hand example");
  c.near(rouge_l(toks({"a", "c", "d"}), toks({"a", "b", "c", "d"})).f1, 0.8571, 1e-4, "LCS hand example");
}

Matrix rows(std::initializer_list<std::initializer_list<double>> list) {
  Matrix m(static_cast<Eigen::Index>(list.size()), static_cast<Eigen::Index>(list.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : list) {
    Eigen::Index col = 0;
    for (double v : row) m(r, col++) = v;
    ++r;
  }
  return m;
}

Vector vec(std::initializer_list<double> list) {
  Vector v(static_cast<Eigen::Index>(list.size()));
  Eigen::Index i = 0;
  for (double x : list) v[i++] = x;
  return v;
}

void score_function(Checker& c) {
  const Matrix eye = rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  c.near(greedy_match(eye, eye, vec({0.2, 0.3, 0.5}), 1.0).score, 2.0, 1e-6, "identical rows");
  c.near(greedy_match(rows({{1, 0, 0, 0}, {0, 1, 0, 0}}), rows({{0, 0, 1, 0}, {0, 0, 0, 3}}), vec({0.5, 0.5}), 1.0)
             .score,
         1.0, 1e-6, "orthogonal rows");
  c.near(score(rows({{1, 0}, {0, 1}}), rows({{1, 0}}), WeightVector{vec({0.75, 0.25})}).score, 1.8667, 1e-4,
         "weighted example");
  c.near(score(rows({{1, 0}, {0, 1}}), rows({{1, 0}}), WeightVector{vec({0.75, 0.25})}).score, 2 * 1.75 * 2 / 3.75,
         1e-6, "weighted example (exact)");

  std::uint64_t state = 77;
  for (int t = 0; t < 10000; ++t) {
    const Matrix d = random_rows(1 + t % 9, 6, state);
    const Matrix cand = random_rows(1 + t % 5, 6, state);
    Vector w = Vector::NullaryExpr(d.rows(), [&] { return uniform01(state) + 1e-6; });
    w /= w.sum();
    const auto s = greedy_match(d, cand, w, 1.0);
    for (double v : {s.recall, s.precision, s.score}) {
      c.expect(v >= -1e-12 && v <= 2.0 + 1e-12, "bound violated at instance " + std::to_string(t));
    }
  }
}

void gradient_check(Checker& c) {
  double worst = 0.0;
  std::size_t entries = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto result = check_gradients(random_gradient_instance(seed));
    entries += result.checked;
    worst = std::max(worst, result.max_relative_error);
    c.expect(result.max_relative_error <= 1e-4,
             "instance " + std::to_string(seed) + ": " + result.worst);
  }
  std::ostringstream os;
  os << "max rel err " << worst << " over " << entries << " entries";
  c.note(os.str());
}

void loss_schedule(Checker& c) {
  const std::vector<double> mixed = {0.5, 0.6, 0.4};
  c.near(ranking_loss(mixed, 0.01).loss, 0.11, 1e-12, "ranking loss");
  TrainConfig config;
  config.warmup_steps = 10000;
  c.near(lr_at(100, config), 2e-7, 1e-20, "lr at 100");
  c.near(lr_at(10000, config), 2e-5, 1e-18, "lr at 10000");
}

double accuracy(const std::vector<TrainingExample>& examples, const ScorerParams& p,
                const EmbeddingProvider& provider, double* chosen_mean) {
  double hits = 0, total = 0;
  for (const auto& e : examples) {
    const auto sel = select(e.document, e.candidates, p, provider);
    hits += sel.chosen == 0;
    total += e.candidates.candidates[sel.chosen].rouge->mean_f;
  }
  if (chosen_mean) *chosen_mean = total / static_cast<double>(examples.size());
  return hits / static_cast<double>(examples.size());
}

double oracle_mean(const std::vector<TrainingExample>& examples, OracleKind kind) {
  double total = 0;
  for (const auto& e : examples) total += oracle_select(e.candidates, kind).chosen_rouge.mean_f;
  return total / static_cast<double>(examples.size());
}

void training_efficacy(Checker& c) {
  PlantedOptions o;
  o.seed = 1;
  o.prefix = "tr";
  const auto train_set = make_planted(o);
  o.seed = 2;
  o.prefix = "va";
  o.documents = 40;
  const auto validation = make_planted(o);
  o.seed = 3;
  o.prefix = "te";
  o.documents = 50;
  const auto test = make_planted(o);
  const StoredEmbeddingProvider provider(merge_stores({&train_set.store, &validation.store, &test.store}));

  TrainConfig config;
  config.head.dim = 16;
  config.warmup_steps = 50;
  config.lr_scale = 0.05;
  config.max_steps = 300;
  config.batch_size = 8;
  config.eval_every = 25;
  config.mode = TrainMode::kFinetune;
  const auto init = ScorerParams::initialize(config.head, 5);

  const double before = accuracy(test.examples, init, provider, nullptr);
  const auto a = train(train_set.examples, validation.examples, config, provider, &init);
  const auto b = train(train_set.examples, validation.examples, config, provider, &init);
  double method_mean = 0.0;
  const double after = accuracy(test.examples, a.params, provider, &method_mean);
  const double lo = oracle_mean(test.examples, OracleKind::kMin);
  const double hi = oracle_mean(test.examples, OracleKind::kMax);

  c.expect(after >= 0.9, "trained accuracy " + std::to_string(after) + " below 0.9");
  c.expect(after > before, "no improvement over the untrained selector");
  c.expect(lo <= method_mean && method_mean <= hi, "method mean outside the oracle range");
  c.expect(a.params == b.params, "two seeded runs differ");
  std::ostringstream os;
  os << "accuracy " << before << " -> " << after << ", mean F " << lo << " <= " << method_mean << " <= " << hi;
  c.note(os.str());
}

void two_stage(Checker& c) {
  std::ostringstream report;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    PlantedOptions pre;
    pre.seed = 10 * seed + 1;
    pre.prefix = "pre";
    pre.documents = 60;
    pre.key_counts = {0, 2, 4, 6, 8, 9};
    // Real-system-like candidates: narrower quality spread, noisier copies.
    PlantedOptions shifted;
    shifted.seed = 10 * seed + 2;
    shifted.prefix = "ft";
    shifted.documents = 6;
    shifted.key_counts = {4, 5, 6, 7};
    shifted.copy_noise = 0.4;
    shifted.lean = 1.0;
    shifted.filler_tokens = 30;
    const auto pre_set = make_planted(pre);
    const auto ft_set = make_planted(shifted);
    shifted.seed = 10 * seed + 3;
    shifted.prefix = "val";
    shifted.documents = 40;
    const auto val_set = make_planted(shifted);
    const StoredEmbeddingProvider provider(merge_stores({&pre_set.store, &ft_set.store, &val_set.store}));

    TrainConfig config;
    config.head.dim = 16;
    config.warmup_steps = 50;
    config.lr_scale = 0.05;
    config.max_steps = 200;
    config.batch_size = 8;
    config.eval_every = 20;
    config.seed = seed;
    config.mode = TrainMode::kPretrain;
    const auto pretrained = train(pre_set.examples, val_set.examples, config, provider);
    config.mode = TrainMode::kFinetune;
    const auto tuned = train(ft_set.examples, val_set.examples, config, provider, &pretrained.params);
    config.mode = TrainMode::kSupervised;
    const auto supervised = train(ft_set.examples, val_set.examples, config, provider);

    const double staged = validation_score(val_set.examples, tuned.params, provider);
    const double direct = validation_score(val_set.examples, supervised.params, provider);
    c.expect(staged >= direct, "seed " + std::to_string(seed) + ": two-stage below supervised");
    report.precision(4);
    report << (seed > 1 ? ", " : "") << "seed " << seed << ": " << staged << " vs " << direct << " (margin "
           << staged - direct << ")";
  }
  c.note(report.str());
}

Document numbered_doc(std::size_t n) {
  std::vector<Tokens> sentences;
  for (std::size_t i = 0; i < n; ++i) sentences.push_back({"s" + std::to_string(i), "w", "x" + std::to_string(i)});
  return make_document("doc", sentences);
}

std::vector<std::size_t> parse_label(const std::string& tag) {
  std::vector<std::size_t> out;
  std::stringstream ss(tag.substr(tag.find(':') + 1));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  return out;
}

void candidate_machinery(Checker& c) {
  for (std::size_t n = 2; n <= 10; ++n) {
    for (std::size_t top = 3; top <= 7; ++top) {
      for (std::size_t cap : {1u, 5u, 20u, 1000u}) {
        EnumerationOptions opts;
        opts.sizes = {2, 3};
        opts.top_n = top;
        opts.cap = cap;
        std::vector<double> scores;
        for (std::size_t i = 0; i < n; ++i) scores.push_back(static_cast<double>((i * 7) % 5));
        const std::size_t kept = std::min(top, n);
        const auto raw = binomial(kept, 2) + binomial(kept, 3);
        const auto set = enumerate_extractive(numbered_doc(n), SentenceRanking{scores}, opts);
        c.expect(set.size() == std::min<std::uint64_t>(raw, cap), "enumeration count n=" + std::to_string(n));
      }
    }
  }

  std::mt19937 rng(11);
  std::uniform_int_distribution<int> pool_size(2, 8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Tokens> pool;
    std::set<Tokens> seen;
    const auto target = static_cast<std::size_t>(pool_size(rng));
    while (pool.size() < target) {
      auto s = random_tokens(rng, 6, 4);
      if (seen.insert(s).second) pool.push_back(s);
    }
    for (std::size_t m : {2u, 3u}) {
      if (pool.size() < m) continue;
      // Candidate sets never repeat a token sequence, so subsets that join
      // into an earlier survivor's tokens drop out as well.
      std::set<std::vector<std::size_t>> want;
      std::set<Tokens> rendered;
      for (const auto& idx : brute_blocking(pool, m)) {
        Tokens joined;
        for (std::size_t i : idx) joined.insert(joined.end(), pool[i].begin(), pool[i].end());
        if (rendered.insert(joined).second) want.insert(idx);
      }
      std::set<std::vector<std::size_t>> got;
      try {
        for (const auto& cand : fuse_sentences("d", {pool}, m).candidates) got.insert(parse_label(cand.system_tag));
      } catch (const Error&) {
        // Every subset blocked.
      }
      c.expect(got == want, "blocking mismatch at trial " + std::to_string(trial));
    }
  }

  std::vector<BeamOutput> outputs;
  for (int r = 7; r >= 0; --r) outputs.push_back({r, {{"hyp", std::to_string(r)}}});
  const auto beam = ingest_beam("d", outputs, 4);
  c.expect(beam.size() == 4, "beam kept " + std::to_string(beam.size()) + " outputs");
  for (std::size_t i = 0; i < beam.size(); ++i) {
    c.expect(beam.candidates[i].tokens == Tokens{"hyp", std::to_string(i)}, "beam rank order");
  }
}

CandidateSet rated_set(const std::string& id, const std::vector<double>& values,
                       const std::vector<std::string>& tags) {
  CandidateSet set;
  set.doc_id = id;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto cand = make_candidate({{"t" + std::to_string(i)}}, tags[i]);
    RougeTriple t;
    t.r1 = t.r2 = t.rl = RougeScore::from(values[i], values[i]);
    t.mean_f = values[i];
    cand.rouge = t;
    set.candidates.push_back(std::move(cand));
  }
  return set;
}

void evaluation_protocol(Checker& c) {
  // Max oracle against the best single system, bin by bin.
  std::uint64_t state = 5;
  std::size_t bins_seen = 0;
  for (int fixture = 0; fixture < 20; ++fixture) {
    const std::vector<std::string> tags = {"s0", "s1", "s2", "s3", "s4", "s5"};
    std::vector<SelectionRecord> records;
    for (int d = 0; d < 30; ++d) {
      std::vector<double> values;
      for (std::size_t s = 0; s < tags.size(); ++s) values.push_back(0.05 * static_cast<double>(s) + 0.3 * uniform01(state));
      records.push_back(oracle_select(rated_set("d" + std::to_string(d), values, tags), OracleKind::kMax));
    }
    const auto analysis = bin_analysis(records, {}, 8.0 + fixture % 5);
    for (const auto& bin : analysis.bins) {
      c.expect(bin.method > bin.best_single, "bin without a win for the max oracle");
      ++bins_seen;
    }
    c.expect(analysis.success_rate == 1.0, "success rate " + std::to_string(analysis.success_rate));
  }
  c.note(std::to_string(bins_seen) + " bins");

  // Random oracle on 1000 two-candidate pairs.
  std::vector<SelectionRecord> pairs;
  for (int d = 0; d < 1000; ++d) {
    const double a = uniform01(state), b = uniform01(state);
    pairs.push_back(oracle_select(rated_set("p" + std::to_string(d), {a, b}, {"a", "b"}), OracleKind::kRandom, 17));
  }
  const std::vector<double> edges = {0, 0.02, 0.05, 0.1, 0.2, 1.0};
  std::size_t correct = 0, total = 0;
  for (const auto& bucket : selection_accuracy(gap_outcomes(pairs), edges)) {
    correct += bucket.correct;
    total += bucket.total;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(total);
  const double half_width = 2.5758 * std::sqrt(0.25 / static_cast<double>(total));
  c.expect(total == 1000 && std::abs(acc - 0.5) <= half_width, "random accuracy " + std::to_string(acc));
  c.note("random accuracy " + std::to_string(acc));

  // Approximate randomization against exact enumeration.
  double worst = 0.0;
  std::mt19937 rng(3);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (std::size_t n = 2; n <= 12; ++n) {
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        b[i] = 0.4 + noise(rng);
        a[i] = b[i] + 0.03 * rep + noise(rng);
      }
      const double diff = std::abs(significance(a, b, 10000, n * 10 + rep) - exact_sign_p(a, b));
      worst = std::max(worst, diff);
      c.expect(diff <= 0.02, "significance off by " + std::to_string(diff) + " at n=" + std::to_string(n));
    }
  }
  c.note("max |p - exact| " + std::to_string(worst));
}

void features(Checker& c) {
  const auto doc = make_document("d", {toks({"the", "mayor", "opened", "a", "bridge", "."}),
                                       toks({"crowds", "cheered", "loudly", "."})});
  const auto f = extract_features(doc, make_candidate({doc.sentences[1].tokens}, "x"));
  c.near(f[kCoverage], 1.0, 0.0, "coverage");
  for (std::size_t k = 0; k < 4; ++k) c.near(f[kNovelty1 + k], 0.0, 0.0, "novelty");

  Tokens long_doc;
  for (int i = 0; i < 100; ++i) long_doc.push_back("w" + std::to_string(i));
  const auto g = extract_features(make_document("d", {long_doc}),
                                  make_candidate({Tokens(long_doc.begin(), long_doc.begin() + 25)}, "x"));
  c.near(g[kCompression], 4.0, 0.0, "compression");

  const auto h = extract_features(make_document("d", {toks({"a", "b"})}),
                                  make_candidate({toks({"the", "cat", "the", "cat"})}, "x"));
  c.near(h[kRepetition2], 1.0 / 3.0, 1e-15, "repetition_2");

  std::mt19937 rng(29);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = random_tokens(rng, 30, 5), cand = random_tokens(rng, 12, 6);
    const auto frags = extractive_fragments(cand, d);
    std::size_t pieces = 0, next = 0;
    for (const auto& fr : frags) {
      pieces += fr.candidate_start - next + 1;
      next = fr.candidate_start + fr.length;
    }
    pieces += cand.size() - next;
    c.expect(pieces == min_factorization(cand, d), "fragmentation not minimal at trial " + std::to_string(trial));
  }
}

// ---------------------------------------------------------------------------

int shell(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_all(const fs::path& p) { return read_file(p.string()); }

void pipeline_once(Checker& c, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string bin = STACKSUM_CLI_PATH;
  const std::string data = STACKSUM_TEST_DATA;
  write_file((dir / "config.json").string(),
             R"({"max_steps":60,"warmup_steps":20,"lr_scale":0.01,"batch_size":4,"eval_every":20,"dim":32})");
  const std::vector<std::string> steps = {
      "generate-candidates --input " + data + "/toy_train.jsonl --mode enumerate --output pre.jsonl",
      "generate-candidates --input " + data + "/toy_train.jsonl --mode beam --output ft.jsonl",
      "generate-candidates --input " + data + "/toy_test.jsonl --mode pool --output test.jsonl",
      "train --candidates pre.jsonl --mode pretrain --config config.json --seed 3 --out-checkpoint pre.ckpt",
      "train --candidates ft.jsonl --mode finetune --init pre.ckpt --config config.json --seed 3 "
      "--out-checkpoint ft.ckpt",
      "rerank --candidates test.jsonl --method refactor --checkpoint ft.ckpt --output refactor.jsonl",
      "rerank --candidates test.jsonl --method random --seed 4 --output random.jsonl",
      "rerank --candidates test.jsonl --method oracle-max --output max.jsonl",
      "evaluate --selections refactor.jsonl --selections random.jsonl --selections max.jsonl "
      "--significance refactor,random --report report.txt --csv report.csv",
  };
  for (const auto& step : steps) {
    const int rc = shell("cd '" + dir.string() + "' && '" + bin + "' " + step + " > /dev/null 2>&1");
    c.expect(rc == 0, "exit " + std::to_string(rc) + ": " + step.substr(0, step.find(' ')));
    if (rc != 0) return;
  }
}

void cli_pipeline(Checker& c) {
  const fs::path root = fs::temp_directory_path() / "stacksum_acceptance";
  pipeline_once(c, root / "a");
  pipeline_once(c, root / "b");
  if (c.failures() > 0) return;
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const auto other = root / "b" / entry.path().filename();
    c.expect(fs::exists(other) && read_all(entry.path()) == read_all(other),
             "differs between runs: " + entry.path().filename().string());
    ++compared;
  }
  c.note(std::to_string(compared) + " files byte-identical");
  fs::remove_all(root);
}

}  // namespace

int main() {
  std::vector<Outcome> outcomes;
  outcomes.push_back(run("AC1", "ROUGE matches brute-force oracle", 10, rouge_oracle));
  outcomes.push_back(run("AC2", "score function hand examples and bounds", 10, score_function));
  outcomes.push_back(run("AC3", "analytic gradients match finite differences", 60, gradient_check));
  outcomes.push_back(run("AC4", "ranking loss and learning-rate schedule", 1, loss_schedule));
  outcomes.push_back(run("AC5", "training recovers planted signal", 300, training_efficacy));
  outcomes.push_back(run("AC6", "pretrain-then-finetune vs supervised under shift", 600, two_stage));
  outcomes.push_back(run("AC7", "candidate enumeration, blocking and beam ingestion", 60, candidate_machinery));
  outcomes.push_back(run("AC8", "oracles, selection accuracy and significance", 60, evaluation_protocol));
  outcomes.push_back(run("AC9", "extractive features", 30, features));
  outcomes.push_back(run("AC10", "end-to-end CLI pipeline is reproducible", 600, cli_pipeline));

  std::size_t passed = 0;
  for (const auto& o : outcomes) passed += o.passed;
  std::printf("%zu/%zu criteria passed\n", passed, outcomes.size());
  return passed == outcomes.size() ? 0 : 1;
}
