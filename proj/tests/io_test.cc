/*
 * Copyright 2026 The CCE Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cce/io.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "cce/errors.h"
#include "cce/rng.h"
#include "test_util.h"

namespace cce {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string Bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  static void Put(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out << bytes;
  }

  fs::path dir_;
};

void ExpectInvalid(const std::function<void()>& fn) {
  try {
    fn();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput) << e.what();
  }
}

TEST_F(IoTest, EmbeddingFileByteLayout) {
  EmbeddingSet set;
  set.dim = 2;
  set.rows = {Vector{{1.0, -2.0}}};
  WriteEmbeddingFile(Path("a.cce"), set);
  const std::string expected(
      "CCE1"
      "\x01\x00\x00\x00"
      "\x02\x00\x00\x00"
      "\x01\x00\x00\x00"
      "\x00\x00\x80\x3f"
      "\x00\x00\x00\xc0",
      24);
  EXPECT_EQ(Bytes(Path("a.cce")), expected);
  EXPECT_FALSE(fs::exists(SidecarPath(Path("a.cce"))));
}

TEST_F(IoTest, EmbeddingRoundTripWithSidecar) {
  Rng rng(1);
  EmbeddingSet set;
  set.dim = 7;
  for (int i = 0; i < 5; ++i) {
    set.rows.push_back(rng.NormalVector(7).cast<float>().cast<double>());
    set.labels.push_back(i % 3);
    set.sample_ids.push_back("img_" + std::to_string(i));
  }
  WriteEmbeddingFile(Path("b.cce"), set);
  EXPECT_EQ(SidecarPath(Path("b.cce")), Path("b.cce") + ".json");
  const EmbeddingSet back = ReadEmbeddingFile(Path("b.cce"));
  EXPECT_EQ(back.dim, 7);
  ASSERT_EQ(back.rows.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(back.rows[i], set.rows[i]);
  EXPECT_EQ(back.labels, set.labels);
  EXPECT_EQ(back.sample_ids, set.sample_ids);
}

TEST_F(IoTest, MissingSidecarDefaultsIds) {
  EmbeddingSet set;
  set.dim = 1;
  set.rows = {Vector{{0.5}}, Vector{{1.5}}};
  WriteEmbeddingFile(Path("c.cce"), set);
  const EmbeddingSet back = ReadEmbeddingFile(Path("c.cce"));
  EXPECT_TRUE(back.labels.empty());
  EXPECT_EQ(back.sample_ids, (std::vector<std::string>{"0", "1"}));
}

TEST_F(IoTest, CorruptEmbeddingFilesAreRejected) {
  EmbeddingSet set;
  set.dim = 2;
  set.rows = {Vector{{1.0, 2.0}}};
  WriteEmbeddingFile(Path("ok.cce"), set);
  std::string bytes = Bytes(Path("ok.cce"));

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  Put(Path("magic.cce"), bad_magic);
  ExpectInvalid([&] { ReadEmbeddingFile(Path("magic.cce")); });

  Put(Path("short.cce"), bytes.substr(0, bytes.size() - 1));
  ExpectInvalid([&] { ReadEmbeddingFile(Path("short.cce")); });

  Put(Path("long.cce"), bytes + "x");
  ExpectInvalid([&] { ReadEmbeddingFile(Path("long.cce")); });

  std::string bad_version = bytes;
  bad_version[4] = 2;
  Put(Path("version.cce"), bad_version);
  ExpectInvalid([&] { ReadEmbeddingFile(Path("version.cce")); });

  ExpectInvalid([&] { ReadEmbeddingFile(Path("absent.cce")); });
}

TEST_F(IoTest, SidecarLengthMismatchIsRejected) {
  EmbeddingSet set;
  set.dim = 1;
  set.rows = {Vector{{0.5}}, Vector{{1.5}}};
  WriteEmbeddingFile(Path("d.cce"), set);
  Put(SidecarPath(Path("d.cce")), R"({"labels": [0], "sample_ids": ["a", "b"]})");
  ExpectInvalid([&] { ReadEmbeddingFile(Path("d.cce")); });
}

TEST_F(IoTest, HeadRoundTripIsExact) {
  Rng rng(2);
  const ModelHead head = testing::RandomHead({6, 4, 3}, rng);
  const ModelHead back = HeadFromJson(HeadToJson(head));
  ASSERT_EQ(back.layers().size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.layers()[i].weights, head.layers()[i].weights);
    EXPECT_EQ(back.layers()[i].bias, head.layers()[i].bias);
    EXPECT_EQ(back.layers()[i].activation, head.layers()[i].activation);
  }
  // Through text as well.
  const ModelHead text = HeadFromJson(Json::parse(HeadToJson(head).dump()));
  EXPECT_EQ(text.layers()[1].weights, head.layers()[1].weights);
}

TEST_F(IoTest, HeadLoaderRevalidates) {
  Rng rng(3);
  Json j = HeadToJson(testing::RandomHead({3, 2}, rng));
  Json wrong_len = j;
  wrong_len["layers"][0]["weights_row_major"].erase(0);
  ExpectInvalid([&] { HeadFromJson(wrong_len); });

  Json relu_last = j;
  relu_last["layers"][0]["activation"] = "relu";
  ExpectInvalid([&] { HeadFromJson(relu_last); });

  Json unknown = j;
  unknown["layers"][0]["activation"] = "tanh";
  ExpectInvalid([&] { HeadFromJson(unknown); });

  Json missing = j;
  missing.erase("layers");
  ExpectInvalid([&] { HeadFromJson(missing); });
}

ConceptBank SmallBank() {
  Rng rng(4);
  return ConceptBank(
      {testing::BoxConcept("stripes", rng.UnitVector(5), Vector::Zero(5), -1, 2),
       testing::BoxConcept("water", rng.UnitVector(5), Vector::Zero(5), -3, 0.5,
                           0.25)},
      0.7);
}

TEST_F(IoTest, BankRoundTripIsExact) {
  const ConceptBank bank = SmallBank();
  const ConceptBank back = BankFromJson(Json::parse(BankToJson(bank).dump()));
  ASSERT_EQ(back.size(), bank.size());
  EXPECT_EQ(back.accuracy_threshold(), bank.accuracy_threshold());
  for (int i = 0; i < bank.size(); ++i) {
    EXPECT_EQ(back[i].name, bank[i].name);
    EXPECT_EQ(back[i].direction, bank[i].direction);
    EXPECT_EQ(back[i].intercept, bank[i].intercept);
    EXPECT_EQ(back[i].pos_score_max, bank[i].pos_score_max);
    EXPECT_EQ(back[i].neg_score_min, bank[i].neg_score_min);
    EXPECT_EQ(back[i].val_accuracy, bank[i].val_accuracy);
  }
}

TEST_F(IoTest, BankLoaderRevalidates) {
  Json j = BankToJson(SmallBank());
  Json not_unit = j;
  not_unit["concepts"][0]["direction"][0] = 5.0;
  ExpectInvalid([&] { BankFromJson(not_unit); });

  Json duplicate = j;
  duplicate["concepts"][1]["name"] = "stripes";
  ExpectInvalid([&] { BankFromJson(duplicate); });

  Json below = j;
  below["concepts"][0]["val_accuracy"] = 0.5;
  ExpectInvalid([&] { BankFromJson(below); });

  Json empty = j;
  empty["concepts"] = Json::array();
  EXPECT_THROW(BankFromJson(empty), Error);
}

TEST_F(IoTest, SpecRoundTripAndDefaults) {
  ScenarioSpec spec;
  spec.dim = 32;
  spec.severity = 0.5;
  spec.companion_concept = 3;
  spec.seed = 99;
  const ScenarioSpec back = SpecFromJson(Json::parse(SpecToJson(spec).dump()));
  EXPECT_EQ(back.dim, 32);
  EXPECT_EQ(back.severity, 0.5);
  EXPECT_EQ(back.companion_concept, 3);
  EXPECT_EQ(back.seed, 99u);
  const ScenarioSpec defaults = SpecFromJson(Json::object());
  EXPECT_EQ(defaults.dim, 512);
  EXPECT_EQ(defaults.num_concepts, 150);
  ExpectInvalid([] { SpecFromJson(Json{{"severity", 1.5}}); });
}

TEST_F(IoTest, Sha256KnownDigest) {
  Put(Path("abc.txt"), "abc");
  EXPECT_EQ(Sha256File(Path("abc.txt")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Put(Path("empty.txt"), "");
  EXPECT_EQ(Sha256File(Path("empty.txt")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_F(IoTest, ManifestVerification) {
  Rng rng(5);
  EmbeddingSet set;
  set.dim = 4;
  set.rows = {rng.NormalVector(4)};
  WriteEmbeddingFile(Path("emb.cce"), set);
  WriteTextFile(Path("head.json"), HeadToJson(testing::RandomHead({4, 3}, rng)).dump());

  ExportManifest m;
  m.model_id = "toy";
  m.layer = -1;
  m.preprocessing = "none";
  m.dim = 4;
  m.files = {{"emb.cce", "embeddings", Sha256File(Path("emb.cce"))},
             {"head.json", "head", Sha256File(Path("head.json"))}};
  m.skipped = {"broken.png"};
  const ExportManifest back = ManifestFromJson(Json::parse(ManifestToJson(m).dump()));
  EXPECT_EQ(back.skipped, m.skipped);
  EXPECT_EQ(back.files.size(), 2u);
  EXPECT_NO_THROW(VerifyManifest(back, dir_.string()));

  ExportManifest tampered = back;
  tampered.files[0].sha256[0] = tampered.files[0].sha256[0] == '0' ? '1' : '0';
  ExpectInvalid([&] { VerifyManifest(tampered, dir_.string()); });

  ExportManifest wrong_dim = back;
  wrong_dim.dim = 5;
  ExpectInvalid([&] { VerifyManifest(wrong_dim, dir_.string()); });

  Json bad_kind = ManifestToJson(m);
  bad_kind["files"][0]["kind"] = "image";
  ExpectInvalid([&] { ManifestFromJson(bad_kind); });
}

TEST_F(IoTest, ConceptManifestResolvesRelativePaths) {
  Rng rng(6);
  EmbeddingSet pos, neg;
  pos.dim = neg.dim = 3;
  for (int i = 0; i < 4; ++i) {
    pos.rows.push_back(rng.NormalVector(3).cast<float>().cast<double>());
    neg.rows.push_back(rng.NormalVector(3).cast<float>().cast<double>());
  }
  fs::create_directories(dir_ / "sub");
  WriteEmbeddingFile(Path("sub/pos.cce"), pos);
  WriteEmbeddingFile(Path("sub/neg.cce"), neg);
  WriteTextFile(Path("sub/concepts.json"),
                R"({"concepts": [{"name": "x", "positives": "pos.cce", "negatives": "neg.cce"}]})");
  const auto examples = LoadConceptManifest(Path("sub/concepts.json"));
  ASSERT_EQ(examples.size(), 1u);
  EXPECT_EQ(examples[0].name, "x");
  EXPECT_EQ(examples[0].positives, pos.rows);
  EXPECT_EQ(examples[0].negatives, neg.rows);
}

TEST_F(IoTest, ExplanationReportFields) {
  const Vector e{{-1.0, 0.0}};
  const ModelHead head =
      ModelHead::Linear(Matrix{{1.0, 0.0}, {-1.0, 0.0}}, Vector::Zero(2));
  const ConceptBank bank(
      {testing::BoxConcept("a", Vector{{1.0, 0.0}}, e, 0.0, 3.0),
       testing::BoxConcept("b", Vector{{0.0, 1.0}}, e, -1.0, 1.0)},
      0.7);
  const CCEResult r = CceExplain(e, 0, head, bank);
  const Json j = ExplanationToJson("s1", 0, r, 1, 2.5);
  EXPECT_EQ(j["sample_id"], "s1");
  EXPECT_EQ(j["label"], 0);
  ASSERT_EQ(j["top_k"].size(), 1u);
  EXPECT_EQ(j["top_k"][0]["concept"], "a");
  EXPECT_EQ(j["top_k"][0]["rank"], 1);
  EXPECT_EQ(j["top_k"][0]["w_max"].get<double>(), r.bounds.w_max(0));
  EXPECT_EQ(j["prediction_before"]["class"], 1);
  EXPECT_EQ(j["steps"], r.steps);
  EXPECT_EQ(j["wall_time_ms"], 2.5);
}

}  // namespace
}  // namespace cce
