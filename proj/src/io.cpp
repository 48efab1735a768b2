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

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cce/errors.h"

namespace cce {

namespace {

namespace fs = std::filesystem;

constexpr char kMagic[4] = {'C', 'C', 'E', '1'};
constexpr std::uint32_t kVersion = 1;

void PutU32(std::string* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>(v >> (8 * i)));
}

std::uint32_t GetU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 |
         static_cast<std::uint32_t>(p[3]) << 24;
}

std::string ReadBinary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kInvalidInput, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteBinary(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kInvalidInput, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kInvalidInput, "write failed: " + path);
}

template <typename T>
T Get(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    Fail(ErrorKind::kInvalidInput, where + ": missing '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kInvalidInput,
         where + ": bad '" + key + "': " + e.what());
  }
}

Vector ToVector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> FromVector(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Json PredictionJson(const Prediction<double>& p) {
  return {{"class", p.predicted_class}, {"confidence", p.confidence}};
}

std::string Resolve(const std::string& path, const std::string& base_dir) {
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).string();
}

}  // namespace

std::string SidecarPath(const std::string& path) { return path + ".json"; }

void WriteEmbeddingFile(const std::string& path, const EmbeddingSet& set) {
  if (set.dim <= 0) Fail(ErrorKind::kInvalidInput, "embedding dim must be > 0");
  if (!set.labels.empty() && set.labels.size() != set.rows.size()) {
    Fail(ErrorKind::kInvalidInput, "labels length != row count");
  }
  if (!set.sample_ids.empty() && set.sample_ids.size() != set.rows.size()) {
    Fail(ErrorKind::kInvalidInput, "sample_ids length != row count");
  }
  std::string bytes(kMagic, sizeof(kMagic));
  PutU32(&bytes, kVersion);
  PutU32(&bytes, static_cast<std::uint32_t>(set.dim));
  PutU32(&bytes, static_cast<std::uint32_t>(set.rows.size()));
  bytes.reserve(bytes.size() + set.rows.size() * set.dim * 4);
  for (const Vector& row : set.rows) {
    if (row.size() != set.dim) {
      Fail(ErrorKind::kInvalidInput, "row dim != embedding set dim");
    }
    RequireFinite(row, "embedding row");
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      PutU32(&bytes, std::bit_cast<std::uint32_t>(static_cast<float>(row(i))));
    }
  }
  WriteBinary(path, bytes);

  if (set.labels.empty() && set.sample_ids.empty()) {
    fs::remove(SidecarPath(path));  // a stale sidecar would misdescribe rows
    return;
  }
  Json sidecar;
  sidecar["labels"] = set.labels;
  std::vector<std::string> ids = set.sample_ids;
  if (ids.empty()) {
    for (std::size_t i = 0; i < set.rows.size(); ++i) {
      ids.push_back(std::to_string(i));
    }
  }
  sidecar["sample_ids"] = ids;
  WriteTextFile(SidecarPath(path), sidecar.dump(2) + "\n");
}

EmbeddingSet ReadEmbeddingFile(const std::string& path) {
  const std::string bytes = ReadBinary(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    Fail(ErrorKind::kInvalidInput, path + ": not a CCE1 embedding file");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (GetU32(p + 4) != kVersion) {
    Fail(ErrorKind::kInvalidInput, path + ": unsupported version");
  }
  EmbeddingSet set;
  set.dim = static_cast<int>(GetU32(p + 8));
  const std::uint64_t count = GetU32(p + 12);
  if (set.dim <= 0) Fail(ErrorKind::kInvalidInput, path + ": dim is 0");
  if (bytes.size() != 16 + count * static_cast<std::uint64_t>(set.dim) * 4) {
    Fail(ErrorKind::kInvalidInput, path + ": payload length mismatch");
  }
  set.rows.reserve(count);
  const unsigned char* q = p + 16;
  for (std::uint64_t r = 0; r < count; ++r) {
    Vector row(set.dim);
    for (int i = 0; i < set.dim; ++i, q += 4) {
      row(i) = static_cast<double>(std::bit_cast<float>(GetU32(q)));
    }
    RequireFinite(row, path + " row " + std::to_string(r));
    set.rows.push_back(std::move(row));
  }

  if (fs::exists(SidecarPath(path))) {
    const Json sidecar = ReadJsonFile(SidecarPath(path));
    set.labels = Get<std::vector<int>>(sidecar, "labels", SidecarPath(path));
    set.sample_ids =
        Get<std::vector<std::string>>(sidecar, "sample_ids", SidecarPath(path));
    if (!set.labels.empty() && set.labels.size() != count) {
      Fail(ErrorKind::kInvalidInput, path + ": labels length != count");
    }
    if (set.sample_ids.size() != count) {
      Fail(ErrorKind::kInvalidInput, path + ": sample_ids length != count");
    }
  }
  if (set.sample_ids.empty()) {
    for (std::uint64_t i = 0; i < count; ++i) {
      set.sample_ids.push_back(std::to_string(i));
    }
  }
  return set;
}

Json HeadToJson(const ModelHead& head) {
  Json layers = Json::array();
  for (const auto& l : head.layers()) {
    layers.push_back({
        {"rows", l.weights.rows()},
        {"cols", l.weights.cols()},
        {"weights_row_major",
         std::vector<double>(l.weights.data(),
                             l.weights.data() + l.weights.size())},
        {"bias", FromVector(l.bias)},
        {"activation", ActivationName(l.activation)},
    });
  }
  return {{"input_dim", head.input_dim()},
          {"num_classes", head.num_classes()},
          {"layers", layers}};
}

ModelHead HeadFromJson(const Json& j) {
  const std::string where = "head";
  const int input_dim = Get<int>(j, "input_dim", where);
  const int num_classes = Get<int>(j, "num_classes", where);
  const Json layers = Get<Json>(j, "layers", where);
  if (!layers.is_array() || layers.empty()) {
    Fail(ErrorKind::kInvalidInput, "head: layers must be a non-empty array");
  }
  std::vector<DenseLayer<double>> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lw = "head layer " + std::to_string(i);
    const Json& l = layers[i];
    const int rows = Get<int>(l, "rows", lw);
    const int cols = Get<int>(l, "cols", lw);
    const auto w = Get<std::vector<double>>(l, "weights_row_major", lw);
    const auto b = Get<std::vector<double>>(l, "bias", lw);
    const auto act = Get<std::string>(l, "activation", lw);
    if (rows <= 0 || cols <= 0 ||
        w.size() != static_cast<std::size_t>(rows) * cols) {
      Fail(ErrorKind::kInvalidInput, lw + ": weights length != rows * cols");
    }
    if (act != "relu" && act != "none") {
      Fail(ErrorKind::kInvalidInput, lw + ": unknown activation '" + act + "'");
    }
    DenseLayer<double> layer;
    layer.weights = Eigen::Map<const Matrix>(w.data(), rows, cols);
    layer.bias = ToVector(b);
    layer.activation = act == "relu" ? Activation::kRelu : Activation::kNone;
    out.push_back(std::move(layer));
  }
  ModelHead head(std::move(out));
  if (head.input_dim() != input_dim || head.num_classes() != num_classes) {
    Fail(ErrorKind::kInvalidInput, "head: declared dims disagree with layers");
  }
  return head;
}

Json BankToJson(const ConceptBank& bank) {
  Json concepts = Json::array();
  for (const ConceptVector& c : bank.concepts()) {
    concepts.push_back({{"name", c.name},
                        {"direction", FromVector(c.direction)},
                        {"intercept", c.intercept},
                        {"val_accuracy", c.val_accuracy},
                        {"pos_score_max", c.pos_score_max},
                        {"neg_score_min", c.neg_score_min}});
  }
  return {{"dim", bank.dim()},
          {"threshold", bank.accuracy_threshold()},
          {"concepts", concepts}};
}

ConceptBank BankFromJson(const Json& j) {
  const std::string where = "bank";
  const int dim = Get<int>(j, "dim", where);
  const double threshold = Get<double>(j, "threshold", where);
  const Json concepts = Get<Json>(j, "concepts", where);
  if (!concepts.is_array()) {
    Fail(ErrorKind::kInvalidInput, "bank: concepts must be an array");
  }
  std::vector<ConceptVector> out;
  for (const Json& c : concepts) {
    ConceptVector v;
    v.name = Get<std::string>(c, "name", where);
    v.direction = ToVector(Get<std::vector<double>>(c, "direction", v.name));
    v.intercept = Get<double>(c, "intercept", v.name);
    v.val_accuracy = Get<double>(c, "val_accuracy", v.name);
    v.pos_score_max = Get<double>(c, "pos_score_max", v.name);
    v.neg_score_min = Get<double>(c, "neg_score_min", v.name);
    out.push_back(std::move(v));
  }
  ConceptBank bank(std::move(out), threshold);
  if (bank.dim() != dim) {
    Fail(ErrorKind::kInvalidInput, "bank: declared dim disagrees with concepts");
  }
  return bank;
}

Json SpecToJson(const ScenarioSpec& s) {
  Json j = {{"dim", s.dim},
            {"num_classes", s.num_classes},
            {"num_concepts", s.num_concepts},
            {"confounded_class", s.confounded_class},
            {"confounded_concept", s.confounded_concept},
            {"severity", s.severity},
            {"train_per_class", s.train_per_class},
            {"ood_test_count", s.ood_test_count},
            {"noise_sigma", s.noise_sigma},
            {"background_rate", s.background_rate},
            {"concept_noise_sigma", s.concept_noise_sigma},
            {"concept_examples", s.concept_examples},
            {"accuracy_threshold", s.accuracy_threshold},
            {"split_fraction", s.split_fraction},
            {"head_epochs", s.head_epochs},
            {"head_learning_rate", s.head_learning_rate},
            {"seed", s.seed}};
  j["companion_concept"] =
      s.companion_concept ? Json(*s.companion_concept) : Json(nullptr);
  return j;
}

ScenarioSpec SpecFromJson(const Json& j) {
  if (!j.is_object()) Fail(ErrorKind::kInvalidInput, "spec must be an object");
  ScenarioSpec s;
  auto opt = [&](const char* key, auto* field) {
    if (j.contains(key)) {
      *field = Get<std::decay_t<decltype(*field)>>(j, key, "spec");
    }
  };
  opt("dim", &s.dim);
  opt("num_classes", &s.num_classes);
  opt("num_concepts", &s.num_concepts);
  opt("confounded_class", &s.confounded_class);
  opt("confounded_concept", &s.confounded_concept);
  opt("severity", &s.severity);
  opt("train_per_class", &s.train_per_class);
  opt("ood_test_count", &s.ood_test_count);
  opt("noise_sigma", &s.noise_sigma);
  opt("background_rate", &s.background_rate);
  opt("concept_noise_sigma", &s.concept_noise_sigma);
  opt("concept_examples", &s.concept_examples);
  opt("accuracy_threshold", &s.accuracy_threshold);
  opt("split_fraction", &s.split_fraction);
  opt("head_epochs", &s.head_epochs);
  opt("head_learning_rate", &s.head_learning_rate);
  opt("seed", &s.seed);
  if (j.contains("companion_concept") && !j["companion_concept"].is_null()) {
    s.companion_concept = Get<int>(j, "companion_concept", "spec");
  }
  s.Validate();
  return s;
}

Json ExplanationToJson(const std::string& sample_id, int label,
                       const CCEResult& result, int top_k,
                       double wall_time_ms) {
  Json top = Json::array();
  const int k = std::min<int>(top_k, static_cast<int>(result.ranking.size()));
  for (int r = 0; r < k; ++r) {
    const RankedConcept& c = result.ranking[r];
    top.push_back({{"concept", c.name},
                   {"score", c.score},
                   {"w_min", result.bounds.w_min(c.index)},
                   {"w_max", result.bounds.w_max(c.index)},
                   {"rank", c.rank}});
  }
  return {{"sample_id", sample_id},
          {"label", label},
          {"prediction_before", PredictionJson(result.prediction_before.at(0))},
          {"prediction_after", PredictionJson(result.prediction_after.at(0))},
          {"top_k", top},
          {"loss_initial", result.loss_initial},
          {"loss_final", result.loss_final},
          {"steps", result.steps},
          {"wall_time_ms", wall_time_ms}};
}

std::vector<ConceptExamples> LoadConceptManifest(const std::string& path) {
  const Json j = ReadJsonFile(path);
  const std::string base = fs::path(path).parent_path().string();
  const Json concepts = Get<Json>(j, "concepts", path);
  if (!concepts.is_array() || concepts.empty()) {
    Fail(ErrorKind::kInvalidInput, path + ": concepts must be non-empty");
  }
  std::vector<ConceptExamples> out;
  for (const Json& c : concepts) {
    ConceptExamples ex;
    ex.name = Get<std::string>(c, "name", path);
    ex.positives =
        ReadEmbeddingFile(Resolve(Get<std::string>(c, "positives", ex.name), base))
            .rows;
    ex.negatives =
        ReadEmbeddingFile(Resolve(Get<std::string>(c, "negatives", ex.name), base))
            .rows;
    out.push_back(std::move(ex));
  }
  return out;
}

ExportManifest ManifestFromJson(const Json& j) {
  const std::string where = "manifest";
  ExportManifest m;
  m.model_id = Get<std::string>(j, "model_id", where);
  m.layer = Get<int>(j, "layer", where);
  m.preprocessing = Get<std::string>(j, "preprocessing", where);
  m.dim = Get<int>(j, "dim", where);
  for (const Json& f : Get<Json>(j, "files", where)) {
    ManifestFile mf;
    mf.path = Get<std::string>(f, "path", where);
    mf.kind = Get<std::string>(f, "kind", where);
    mf.sha256 = Get<std::string>(f, "sha256", where);
    if (mf.kind != "embeddings" && mf.kind != "head") {
      Fail(ErrorKind::kInvalidInput, "manifest: unknown file kind " + mf.kind);
    }
    m.files.push_back(std::move(mf));
  }
  if (j.contains("skipped")) {
    m.skipped = Get<std::vector<std::string>>(j, "skipped", where);
  }
  return m;
}

Json ManifestToJson(const ExportManifest& m) {
  Json files = Json::array();
  for (const ManifestFile& f : m.files) {
    files.push_back({{"path", f.path}, {"kind", f.kind}, {"sha256", f.sha256}});
  }
  return {{"model_id", m.model_id}, {"layer", m.layer},
          {"preprocessing", m.preprocessing}, {"dim", m.dim},
          {"files", files}, {"skipped", m.skipped}};
}

void VerifyManifest(const ExportManifest& manifest,
                    const std::string& base_dir) {
  for (const ManifestFile& f : manifest.files) {
    const std::string path = Resolve(f.path, base_dir);
    if (Sha256File(path) != f.sha256) {
      Fail(ErrorKind::kInvalidInput, path + ": checksum mismatch");
    }
    int dim = 0;
    if (f.kind == "embeddings") {
      dim = ReadEmbeddingFile(path).dim;
    } else {
      dim = HeadFromJson(ReadJsonFile(path)).input_dim();
    }
    if (dim != manifest.dim) {
      Fail(ErrorKind::kInvalidInput,
           path + ": dim " + std::to_string(dim) + " != manifest dim " +
               std::to_string(manifest.dim));
    }
  }
}

std::string Sha256File(const std::string& path) {
  const std::string bytes = ReadBinary(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len,
                 EVP_sha256(), nullptr) != 1) {
    Fail(ErrorKind::kInvalidInput, "sha256 failed for " + path);
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(digest[i]);
  }
  return hex.str();
}

Json ReadJsonFile(const std::string& path) {
  const std::string text = ReadBinary(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kInvalidInput, path + ": " + e.what());
  }
}

void WriteTextFile(const std::string& path, const std::string& text) {
  WriteBinary(path, text);
}

}  // namespace cce
