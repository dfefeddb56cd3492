#include "stacksum/io.h"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "stacksum/error.h"

namespace stacksum {
namespace {

Matrix filled(Eigen::Index rows, Eigen::Index cols, double start) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = start + 0.37 * static_cast<double>(i);
  return m;
}

EmbeddingStore two_entries() {
  EmbeddingStore store;
  store.dim = 3;
  store.entries["doc/a"] = filled(4, 3, -1.25);
  store.entries["cand/é"] = filled(2, 3, 7.5);
  return store;
}

TEST(Embeddings, RoundTripIsBitwise) {
  const auto store = two_entries();
  const auto bytes = encode_embeddings(store);
  EXPECT_EQ(bytes.substr(0, 8), std::string("RFEMB\0\0\1", 8));
  const auto back = decode_embeddings(bytes);
  EXPECT_EQ(back.dim, 3u);
  ASSERT_EQ(back.entries.size(), 2u);
  for (const auto& [key, m] : store.entries) {
    const auto& got = back.entries.at(key);
    ASSERT_EQ(got.rows(), m.rows());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      EXPECT_EQ(static_cast<float>(m.data()[i]), static_cast<float>(got.data()[i]));
    }
  }
  EXPECT_EQ(encode_embeddings(back), bytes);
}

TEST(Embeddings, RejectsBadMagicAndTruncation) {
  auto bytes = encode_embeddings(two_entries());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_embeddings(bad), Error);
  try {
    decode_embeddings(std::string_view(bytes).substr(0, bytes.size() - 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
  EXPECT_THROW(decode_embeddings(bytes + "x"), Error);
}

TEST(Checkpoint, RoundTripPreservesParamsAndMetadata) {
  HeadConfig head;
  head.dim = 8;
  head.num_heads = 2;
  Checkpoint ckpt{ScorerParams::initialize(head, 11), {}};
  ckpt.metadata.step = 42;
  ckpt.metadata.seed = 9;
  ckpt.metadata.mode = "pretrain";
  ckpt.metadata.validation = 0.625;
  ckpt.metadata.provider_seed = 7;
  const auto text = encode_checkpoint(ckpt);
  const auto back = decode_checkpoint(text);
  EXPECT_EQ(back.params, ckpt.params);
  EXPECT_EQ(back.metadata.step, 42u);
  EXPECT_EQ(back.metadata.mode, "pretrain");
  EXPECT_DOUBLE_EQ(back.metadata.validation, 0.625);
  EXPECT_EQ(encode_checkpoint(back), text);
  EXPECT_THROW(decode_checkpoint("{}"), Error);
  EXPECT_THROW(decode_checkpoint("not json"), Error);
}

TEST(Dataset, RoundTripKeepsSystemOrder) {
  const std::string line =
      R"({"doc_id":"x","sentences":["A b.","C d."],"reference":"a b","systems":{"z":["one"],"a":["two","three"]}})";
  const auto rec = parse_dataset_record(line);
  ASSERT_EQ(rec.systems.size(), 2u);
  EXPECT_EQ(rec.systems[0].first, "z");
  EXPECT_EQ(rec.systems[1].second.size(), 2u);
  EXPECT_FALSE(rec.sentence_scores.has_value());
  EXPECT_EQ(parse_dataset_record(to_json_line(rec)).systems, rec.systems);
  EXPECT_THROW(parse_dataset_record(R"({"sentences":["a"]})"), Error);
}

TEST(Dataset, ShippedToyCorpusLoads) {
  const auto train = read_dataset(std::string(STACKSUM_TEST_DATA) + "/toy_train.jsonl");
  EXPECT_EQ(train.size(), 30u);
  EXPECT_THROW(read_dataset("/nonexistent/file.jsonl"), Error);
}

TEST(Candidates, RoundTrip) {
  CandidateRecord rec;
  rec.document = make_document("d1", {{"a", "b"}, {"c"}});
  rec.reference = Tokens{"a", "c"};
  rec.set.doc_id = "d1";
  auto c = make_candidate({{"a", "b"}}, "ext:0");
  c.sentence_indices = std::vector<std::size_t>{0};
  rec.set.candidates.push_back(c);
  rec.set.candidates.push_back(make_candidate({{"c"}}, "ext:1"));
  rec.set = attach_rouge(rec.set, *rec.reference);  // may reorder
  const auto line = to_json_line(rec);
  const auto back = parse_candidate_record(line);
  EXPECT_EQ(back.document.tokens, rec.document.tokens);
  ASSERT_EQ(back.set.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.set.candidates[i].system_tag, rec.set.candidates[i].system_tag);
    EXPECT_EQ(back.set.candidates[i].sentence_indices, rec.set.candidates[i].sentence_indices);
  }
  EXPECT_DOUBLE_EQ(back.set.candidates[1].rouge->mean_f, rec.set.candidates[1].rouge->mean_f);
  EXPECT_EQ(to_json_line(back), line);
}

TEST(Selections, RoundTripAndValidation) {
  CandidateSet set;
  set.doc_id = "d";
  set.candidates = {make_candidate({{"a"}}, "x"), make_candidate({{"b"}}, "y")};
  set = attach_rouge(set, {"b"});  // sorts "y" first
  const auto rec = make_selection(set, "m", 0, {0.9, 0.2});
  const auto back = parse_selection_record(to_json_line(rec));
  EXPECT_EQ(back.chosen, 0u);
  EXPECT_EQ(back.system_tags, rec.system_tags);
  EXPECT_EQ(back.scores, rec.scores);
  EXPECT_DOUBLE_EQ(back.chosen_rouge.r1.f1, 1.0);
  EXPECT_THROW(parse_selection_record(R"({"doc_id":"d","method":"m","chosen":5,"candidates":[]})"), Error);
}

TEST(Ranker, RoundTrip) {
  LinearRanker r;
  r.weights.assign(kFeatureCount, 0.5);
  r.weights[1] = -1.0;
  r.bias = 0.25;
  r.mean.assign(kFeatureCount, 1.0);
  r.stddev.assign(kFeatureCount, 3.0);
  r.c = 0.01;
  const auto back = decode_ranker(encode_ranker(r));
  EXPECT_EQ(back.weights, r.weights);
  EXPECT_EQ(back.stddev, r.stddev);
  EXPECT_DOUBLE_EQ(back.c, 0.01);
}

TEST(TrainConfigJson, OverridesAndRejectsUnknownKeys) {
  const auto c = parse_train_config(R"({"lambda_c":0.05,"mode":"finetune","dim":16})");
  EXPECT_DOUBLE_EQ(c.lambda_c, 0.05);
  EXPECT_EQ(c.mode, TrainMode::kFinetune);
  EXPECT_EQ(c.head.dim, 16u);
  EXPECT_EQ(c.batch_size, TrainConfig{}.batch_size);
  EXPECT_THROW(parse_train_config(R"({"lamda":1})"), Error);
  EXPECT_THROW(parse_train_config(R"({"sort_key":"r9"})"), Error);
  const auto again = parse_train_config(encode_train_config(c));
  EXPECT_EQ(again.head.dim, 16u);
  EXPECT_EQ(again.mode, TrainMode::kFinetune);
}

TEST(Files, WriteThenRead) {
  const auto path = (std::filesystem::temp_directory_path() / "stacksum_io_test.bin").string();
  const auto store = two_entries();
  write_embedding_file(path, store);
  EXPECT_EQ(read_embedding_file(path).entries.size(), 2u);
  write_file(path, "a\n\nb\n");
  EXPECT_EQ(read_lines(path), (std::vector<std::string>{"a", "b"}));
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace stacksum
