#ifndef STACKSUM_IO_H_
#define STACKSUM_IO_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stacksum/candidates.h"
#include "stacksum/embedding.h"
#include "stacksum/eval.h"
#include "stacksum/params.h"
#include "stacksum/ranker.h"
#include "stacksum/text.h"
#include "stacksum/trainer.h"

namespace stacksum {

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
// Non-empty lines of a JSONL file.
std::vector<std::string> read_lines(const std::string& path);

// ---- Dataset (input) JSONL ------------------------------------------------
//   {"doc_id": str, "sentences": [str], "reference": str,
//    "systems": {tag: [str, ...]}, "sentence_scores": [num]}
// `systems` keeps file order; each list is in beam-rank order.
struct DatasetRecord {
  std::string doc_id;
  std::vector<std::string> sentences;
  std::optional<std::string> reference;
  std::vector<std::pair<std::string, std::vector<std::string>>> systems;
  std::optional<std::vector<double>> sentence_scores;
};

DatasetRecord parse_dataset_record(std::string_view line);
std::string to_json_line(const DatasetRecord& record);
// Rejects duplicate doc_ids.
std::vector<DatasetRecord> read_dataset(const std::string& path);

// ---- Candidate JSONL -----------------------------------------------------
//   {"doc_id", "origin", "document": [[tok]], "reference": [tok],
//    "candidates": [{"system_tag", "sentences": [[tok]],
//                    "sentence_indices": [int], "rouge": {...}}]}
struct CandidateRecord {
  Document document;
  std::optional<Tokens> reference;
  CandidateSet set;
};

std::string to_json_line(const CandidateRecord& record);
CandidateRecord parse_candidate_record(std::string_view line);
std::vector<CandidateRecord> read_candidate_records(const std::string& path);

// ---- Selection JSONL -----------------------------------------------------
//   {"doc_id", "method", "chosen", "chosen_rouge": {...},
//    "candidates": [{"system_tag", "rouge": {...}, "score"}]}
std::string to_json_line(const SelectionRecord& record);
SelectionRecord parse_selection_record(std::string_view line);
std::vector<SelectionRecord> read_selections(const std::string& path);

// ---- Embedding container -------------------------------------------------
// 8-byte magic "RFEMB\0\0\1", u32 dim, u32 entry count, then per entry:
// u32 id length, UTF-8 id, u32 row count, rows·dim float32, row-major. All
// integers and floats little-endian. Entries are written in key order.
std::string encode_embeddings(const EmbeddingStore& store);
EmbeddingStore decode_embeddings(std::string_view bytes);
void write_embedding_file(const std::string& path, const EmbeddingStore& store);
EmbeddingStore read_embedding_file(const std::string& path);

// ---- Checkpoint ----------------------------------------------------------
struct CheckpointMetadata {
  std::size_t step = 0;
  std::uint64_t seed = 0;
  std::string mode;
  double validation = 0.0;
  // Embeddings used in training: "hash" (with provider_seed) or "file".
  std::string provider = "hash";
  std::uint64_t provider_seed = 0;
};

struct Checkpoint {
  static constexpr int kFormatVersion = 1;
  ScorerParams params;
  CheckpointMetadata metadata;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view text);
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

// ---- Ranker and training config ------------------------------------------
std::string encode_ranker(const LinearRanker& ranker);
LinearRanker decode_ranker(std::string_view text);

// Overrides fields of `base` with the keys present in a JSON object.
TrainConfig parse_train_config(std::string_view text, TrainConfig base = {});
std::string encode_train_config(const TrainConfig& config);

}  // namespace stacksum

#endif  // STACKSUM_IO_H_
