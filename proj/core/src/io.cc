#include "stacksum/io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stacksum/error.h"

namespace stacksum {
namespace {

using json = nlohmann::ordered_json;

constexpr char kEmbeddingMagic[8] = {'R', 'F', 'E', 'M', 'B', '\0', '\0', '\1'};

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error("malformed " + std::string(what) + ": " + e.what());
  }
}

// Wraps nlohmann lookups so that type and key errors surface as Error.
template <typename T>
T get(const json& j, const char* key, std::string_view what) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(std::string(what) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string(what) + ": bad field '" + key + "': " + e.what());
  }
}

json rouge_score_json(const RougeScore& s) { return json{{"p", s.precision}, {"r", s.recall}, {"f", s.f1}}; }

json rouge_json(const RougeTriple& t) {
  return json{{"r1", rouge_score_json(t.r1)},
              {"r2", rouge_score_json(t.r2)},
              {"rl", rouge_score_json(t.rl)},
              {"mean_f", t.mean_f}};
}

RougeScore rouge_score_from(const json& j) {
  RougeScore s;
  s.precision = get<double>(j, "p", "rouge score");
  s.recall = get<double>(j, "r", "rouge score");
  s.f1 = get<double>(j, "f", "rouge score");
  return s;
}

RougeTriple rouge_from(const json& j) {
  RougeTriple t;
  t.r1 = rouge_score_from(get<json>(j, "r1", "rouge"));
  t.r2 = rouge_score_from(get<json>(j, "r2", "rouge"));
  t.rl = rouge_score_from(get<json>(j, "rl", "rouge"));
  t.mean_f = get<double>(j, "mean_f", "rouge");
  return t;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw Error("unexpected end of file at byte offset " + std::to_string(bytes_.size()));
    }
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    const auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[static_cast<std::size_t>(i)]);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t offset() const { return pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

json matrix_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) data.push_back(m.data()[i]);
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const json& j, const std::string& name) {
  const auto rows = get<std::size_t>(j, "rows", name);
  const auto cols = get<std::size_t>(j, "cols", name);
  const auto data = get<std::vector<double>>(j, "data", name);
  if (data.size() != rows * cols) throw Error("tensor " + name + " has wrong element count");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < data.size(); ++i) m.data()[i] = data[i];
  return m;
}

std::vector<Tokens> sentences_from(const json& j, std::string_view what) {
  if (!j.is_array()) throw Error(std::string(what) + ": sentences must be an array");
  try {
    return j.get<std::vector<Tokens>>();
  } catch (const json::exception& e) {
    throw Error(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed for '" + path + "'");
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

DatasetRecord parse_dataset_record(std::string_view line) {
  const auto j = parse_json(line, "dataset record");
  DatasetRecord r;
  r.doc_id = get<std::string>(j, "doc_id", "dataset record");
  const std::string what = "dataset record '" + r.doc_id + "'";
  r.sentences = get<std::vector<std::string>>(j, "sentences", what);
  if (r.sentences.empty()) throw Error(what + ": no sentences");
  if (j.contains("reference") && !j.at("reference").is_null()) {
    r.reference = get<std::string>(j, "reference", what);
  }
  if (j.contains("systems") && !j.at("systems").is_null()) {
    const auto& sys = j.at("systems");
    if (!sys.is_object()) throw Error(what + ": systems must be an object");
    for (const auto& [tag, outputs] : sys.items()) {
      try {
        r.systems.emplace_back(tag, outputs.get<std::vector<std::string>>());
      } catch (const json::exception& e) {
        throw Error(what + ": bad outputs for system '" + tag + "': " + e.what());
      }
    }
  }
  if (j.contains("sentence_scores") && !j.at("sentence_scores").is_null()) {
    r.sentence_scores = get<std::vector<double>>(j, "sentence_scores", what);
    if (r.sentence_scores->size() != r.sentences.size()) {
      throw Error(what + ": sentence_scores length differs from sentences");
    }
  }
  return r;
}

std::string to_json_line(const DatasetRecord& record) {
  json j;
  j["doc_id"] = record.doc_id;
  j["sentences"] = record.sentences;
  if (record.reference) j["reference"] = *record.reference;
  if (!record.systems.empty()) {
    json sys = json::object();
    for (const auto& [tag, outs] : record.systems) sys[tag] = outs;
    j["systems"] = std::move(sys);
  }
  if (record.sentence_scores) j["sentence_scores"] = *record.sentence_scores;
  return j.dump();
}

std::vector<DatasetRecord> read_dataset(const std::string& path) {
  std::vector<DatasetRecord> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    try {
      out.push_back(parse_dataset_record(line));
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(out.back().doc_id).second) {
      throw Error(path + ": duplicate doc_id '" + out.back().doc_id + "'");
    }
  }
  return out;
}

std::string to_json_line(const CandidateRecord& record) {
  json j;
  j["doc_id"] = record.set.doc_id;
  j["origin"] = std::string(to_string(record.set.origin));
  json doc = json::array();
  for (const auto& s : record.document.sentences) doc.push_back(s.tokens);
  j["document"] = std::move(doc);
  if (record.reference) j["reference"] = *record.reference;
  json cands = json::array();
  for (const auto& c : record.set.candidates) {
    json cj;
    cj["system_tag"] = c.system_tag;
    cj["sentences"] = c.sentences;
    if (c.sentence_indices) cj["sentence_indices"] = *c.sentence_indices;
    if (c.rouge) cj["rouge"] = rouge_json(*c.rouge);
    cands.push_back(std::move(cj));
  }
  j["candidates"] = std::move(cands);
  return j.dump();
}

CandidateRecord parse_candidate_record(std::string_view line) {
  const auto j = parse_json(line, "candidate record");
  CandidateRecord r;
  const auto doc_id = get<std::string>(j, "doc_id", "candidate record");
  const std::string what = "candidate record '" + doc_id + "'";
  r.document = make_document(doc_id, sentences_from(get<json>(j, "document", what), what));
  if (j.contains("reference") && !j.at("reference").is_null()) {
    r.reference = get<Tokens>(j, "reference", what);
  }
  r.set.doc_id = doc_id;
  r.set.origin = origin_from_string(get<std::string>(j, "origin", what));
  for (const auto& cj : get<json>(j, "candidates", what)) {
    auto tag = get<std::string>(cj, "system_tag", what);
    std::optional<std::vector<std::size_t>> indices;
    if (cj.contains("sentence_indices")) {
      indices = get<std::vector<std::size_t>>(cj, "sentence_indices", what);
      for (auto i : *indices) {
        if (i >= r.document.sentences.size()) throw Error(what + ": sentence index out of range");
      }
    }
    auto c = make_candidate(sentences_from(get<json>(cj, "sentences", what), what), std::move(tag),
                            std::move(indices));
    if (cj.contains("rouge")) c.rouge = rouge_from(cj.at("rouge"));
    r.set.candidates.push_back(std::move(c));
  }
  if (r.set.candidates.empty()) throw Error(what + ": no candidates");
  return r;
}

std::vector<CandidateRecord> read_candidate_records(const std::string& path) {
  std::vector<CandidateRecord> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    try {
      out.push_back(parse_candidate_record(line));
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(out.back().set.doc_id).second) {
      throw Error(path + ": duplicate doc_id '" + out.back().set.doc_id + "'");
    }
  }
  return out;
}

std::string to_json_line(const SelectionRecord& record) {
  json j;
  j["doc_id"] = record.doc_id;
  j["method"] = record.method;
  j["chosen"] = record.chosen;
  j["chosen_rouge"] = rouge_json(record.chosen_rouge);
  json cands = json::array();
  for (std::size_t i = 0; i < record.candidate_rouge.size(); ++i) {
    json cj;
    if (!record.system_tags.empty()) cj["system_tag"] = record.system_tags[i];
    cj["rouge"] = rouge_json(record.candidate_rouge[i]);
    if (!record.scores.empty()) cj["score"] = record.scores[i];
    cands.push_back(std::move(cj));
  }
  j["candidates"] = std::move(cands);
  return j.dump();
}

SelectionRecord parse_selection_record(std::string_view line) {
  const auto j = parse_json(line, "selection record");
  SelectionRecord r;
  r.doc_id = get<std::string>(j, "doc_id", "selection record");
  const std::string what = "selection record '" + r.doc_id + "'";
  r.method = get<std::string>(j, "method", what);
  r.chosen = get<std::size_t>(j, "chosen", what);
  r.chosen_rouge = rouge_from(get<json>(j, "chosen_rouge", what));
  const auto cands = get<json>(j, "candidates", what);
  bool tags = true;
  bool scores = true;
  for (const auto& cj : cands) {
    tags = tags && cj.contains("system_tag");
    scores = scores && cj.contains("score");
  }
  for (const auto& cj : cands) {
    r.candidate_rouge.push_back(rouge_from(get<json>(cj, "rouge", what)));
    if (tags) r.system_tags.push_back(get<std::string>(cj, "system_tag", what));
    if (scores) r.scores.push_back(get<double>(cj, "score", what));
  }
  r.validate();
  return r;
}

std::vector<SelectionRecord> read_selections(const std::string& path) {
  std::vector<SelectionRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    try {
      out.push_back(parse_selection_record(line));
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string encode_embeddings(const EmbeddingStore& store) {
  std::string out(kEmbeddingMagic, sizeof kEmbeddingMagic);
  put_u32(out, static_cast<std::uint32_t>(store.dim));
  put_u32(out, static_cast<std::uint32_t>(store.entries.size()));
  for (const auto& [id, m] : store.entries) {
    if (static_cast<std::size_t>(m.cols()) != store.dim) {
      throw Error("embedding '" + id + "' has dimension " + std::to_string(m.cols()));
    }
    if (!m.allFinite()) throw Error("embedding '" + id + "' contains NaN or Inf");
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m.data()[i])));
    }
  }
  return out;
}

EmbeddingStore decode_embeddings(std::string_view bytes) {
  if (bytes.size() < sizeof kEmbeddingMagic ||
      std::memcmp(bytes.data(), kEmbeddingMagic, sizeof kEmbeddingMagic) != 0) {
    throw Error("not an embedding file");
  }
  Reader in(bytes);
  in.take(sizeof kEmbeddingMagic);
  EmbeddingStore store;
  store.dim = in.u32();
  if (store.dim == 0) throw Error("embedding file declares dimension 0");
  const auto count = in.u32();
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto id_len = in.u32();
    std::string id(in.take(id_len));
    const auto rows = in.u32();
    if (static_cast<std::uint64_t>(rows) * store.dim * 4 > bytes.size() - in.offset()) {
      throw Error("unexpected end of file at byte offset " + std::to_string(bytes.size()));
    }
    Matrix m(rows, store.dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = in.f32();
    if (!m.allFinite()) throw Error("embedding '" + id + "' contains NaN or Inf");
    if (!store.entries.emplace(std::move(id), std::move(m)).second) {
      throw Error("duplicate embedding id in file");
    }
  }
  if (!in.done()) {
    throw Error("trailing bytes after embedding entries at byte offset " + std::to_string(in.offset()));
  }
  return store;
}

void write_embedding_file(const std::string& path, const EmbeddingStore& store) {
  write_file(path, encode_embeddings(store));
}

EmbeddingStore read_embedding_file(const std::string& path) {
  return decode_embeddings(read_file(path));
}

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  const auto& p = checkpoint.params;
  p.validate();
  json j;
  j["format_version"] = Checkpoint::kFormatVersion;
  j["params_version"] = p.version;
  j["dim"] = p.dim;
  j["num_heads"] = p.num_heads;
  j["num_layers"] = p.blocks.size();
  j["ff_dim"] = p.ff_dim;
  j["use_projection"] = p.projection.has_value();
  json tensors = json::object();
  for (const auto& [name, m] : p.tensors()) tensors[name] = matrix_json(*m);
  j["tensors"] = std::move(tensors);
  const auto& meta = checkpoint.metadata;
  j["metadata"] = json{{"step", meta.step},
                       {"seed", meta.seed},
                       {"mode", meta.mode},
                       {"validation", meta.validation},
                       {"provider", meta.provider},
                       {"provider_seed", meta.provider_seed}};
  return j.dump(1) + "\n";
}

Checkpoint decode_checkpoint(std::string_view text) {
  const auto j = parse_json(text, "checkpoint");
  const auto version = get<int>(j, "format_version", "checkpoint");
  if (version != Checkpoint::kFormatVersion) {
    throw Error("unsupported checkpoint format version " + std::to_string(version));
  }
  Checkpoint c;
  auto& p = c.params;
  p.version = get<int>(j, "params_version", "checkpoint");
  p.dim = get<std::size_t>(j, "dim", "checkpoint");
  p.num_heads = get<std::size_t>(j, "num_heads", "checkpoint");
  p.ff_dim = get<std::size_t>(j, "ff_dim", "checkpoint");
  p.blocks.resize(get<std::size_t>(j, "num_layers", "checkpoint"));
  if (get<bool>(j, "use_projection", "checkpoint")) p.projection = Matrix();
  const auto tensors = get<json>(j, "tensors", "checkpoint");
  for (auto& [name, m] : p.tensors()) {
    if (!tensors.contains(name)) throw Error("checkpoint: missing tensor " + name);
    *m = matrix_from(tensors.at(name), name);
  }
  p.validate();
  const auto meta = get<json>(j, "metadata", "checkpoint");
  c.metadata.step = get<std::size_t>(meta, "step", "checkpoint metadata");
  c.metadata.seed = get<std::uint64_t>(meta, "seed", "checkpoint metadata");
  c.metadata.mode = get<std::string>(meta, "mode", "checkpoint metadata");
  c.metadata.validation = get<double>(meta, "validation", "checkpoint metadata");
  c.metadata.provider = get<std::string>(meta, "provider", "checkpoint metadata");
  c.metadata.provider_seed = get<std::uint64_t>(meta, "provider_seed", "checkpoint metadata");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

std::string encode_ranker(const LinearRanker& ranker) {
  json j;
  j["features"] = std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end());
  j["weights"] = ranker.weights;
  j["bias"] = ranker.bias;
  j["mean"] = ranker.mean;
  j["stddev"] = ranker.stddev;
  j["c"] = ranker.c;
  return j.dump(1) + "\n";
}

LinearRanker decode_ranker(std::string_view text) {
  const auto j = parse_json(text, "ranker");
  const auto names = get<std::vector<std::string>>(j, "features", "ranker");
  if (names.size() != kFeatureCount) {
    throw Error("ranker has " + std::to_string(names.size()) + " features, expected " +
                std::to_string(kFeatureCount));
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (names[i] != kFeatureNames[i]) throw Error("ranker feature " + names[i] + " is out of order");
  }
  LinearRanker r;
  r.weights = get<std::vector<double>>(j, "weights", "ranker");
  r.bias = get<double>(j, "bias", "ranker");
  r.mean = get<std::vector<double>>(j, "mean", "ranker");
  r.stddev = get<std::vector<double>>(j, "stddev", "ranker");
  r.c = get<double>(j, "c", "ranker");
  if (r.weights.size() != kFeatureCount || r.mean.size() != kFeatureCount ||
      r.stddev.size() != kFeatureCount) {
    throw Error("ranker tensors do not match the feature count");
  }
  return r;
}

TrainConfig parse_train_config(std::string_view text, TrainConfig base) {
  const auto j = parse_json(text, "training config");
  if (!j.is_object()) throw Error("training config must be a JSON object");
  static const std::set<std::string> known = {
      "lambda_c", "warmup_steps", "lr_scale", "max_steps", "batch_size", "seed",
      "eval_every", "beta1", "beta2", "eps", "mode", "sort_key", "dim", "num_heads",
      "num_layers", "ff_multiplier", "use_projection"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error("unknown training config key '" + key + "'");
  }
  auto c = base;
  const char* what = "training config";
  if (j.contains("lambda_c")) c.lambda_c = get<double>(j, "lambda_c", what);
  if (j.contains("warmup_steps")) c.warmup_steps = get<std::size_t>(j, "warmup_steps", what);
  if (j.contains("lr_scale")) c.lr_scale = get<double>(j, "lr_scale", what);
  if (j.contains("max_steps")) c.max_steps = get<std::size_t>(j, "max_steps", what);
  if (j.contains("batch_size")) c.batch_size = get<std::size_t>(j, "batch_size", what);
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", what);
  if (j.contains("eval_every")) c.eval_every = get<std::size_t>(j, "eval_every", what);
  if (j.contains("beta1")) c.beta1 = get<double>(j, "beta1", what);
  if (j.contains("beta2")) c.beta2 = get<double>(j, "beta2", what);
  if (j.contains("eps")) c.eps = get<double>(j, "eps", what);
  if (j.contains("mode")) c.mode = train_mode_from_string(get<std::string>(j, "mode", what));
  if (j.contains("sort_key")) {
    const auto key = get<std::string>(j, "sort_key", what);
    if (key == "mean_f") {
      c.sort_key = SortKey::kMeanF;
    } else if (key == "r1") {
      c.sort_key = SortKey::kRouge1;
    } else {
      throw Error("unknown sort_key '" + key + "'");
    }
  }
  if (j.contains("dim")) c.head.dim = get<std::size_t>(j, "dim", what);
  if (j.contains("num_heads")) c.head.num_heads = get<std::size_t>(j, "num_heads", what);
  if (j.contains("num_layers")) c.head.num_layers = get<std::size_t>(j, "num_layers", what);
  if (j.contains("ff_multiplier")) c.head.ff_multiplier = get<std::size_t>(j, "ff_multiplier", what);
  if (j.contains("use_projection")) c.head.use_projection = get<bool>(j, "use_projection", what);
  c.validate();
  return c;
}

std::string encode_train_config(const TrainConfig& c) {
  json j;
  j["lambda_c"] = c.lambda_c;
  j["warmup_steps"] = c.warmup_steps;
  j["lr_scale"] = c.lr_scale;
  j["max_steps"] = c.max_steps;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["eval_every"] = c.eval_every;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["mode"] = std::string(to_string(c.mode));
  j["sort_key"] = c.sort_key == SortKey::kRouge1 ? "r1" : "mean_f";
  j["dim"] = c.head.dim;
  j["num_heads"] = c.head.num_heads;
  j["num_layers"] = c.head.num_layers;
  j["ff_multiplier"] = c.head.ff_multiplier;
  j["use_projection"] = c.head.use_projection;
  return j.dump(1) + "\n";
}

}  // namespace stacksum
