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

// File formats shared with the embedding exporter and the CLI:
//
//   EmbeddingFile  "CCE1" | u32 version=1 | u32 dim | u32 count |
//                  count*dim little-endian float32, row-major.
//                  Sidecar "<path>.json": {labels: [int], sample_ids: [str]}.
//   Head JSON      {input_dim, num_classes, layers: [{rows, cols,
//                  weights_row_major, bias, activation}]}
//   Bank JSON      {dim, threshold, concepts: [{name, direction, intercept,
//                  val_accuracy, pos_score_max, neg_score_min}]}
//   Manifest JSON  {model_id, layer, preprocessing, dim, files: [{path, kind,
//                  sha256}], skipped: [str]}
//
// Every loader re-validates the invariants of the type it produces.

#ifndef CCE_IO_H_
#define CCE_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cce/concept_bank.h"
#include "cce/explainer.h"
#include "cce/model_head.h"
#include "cce/scenarios.h"

namespace cce {

using Json = nlohmann::json;

struct EmbeddingSet {
  int dim = 0;
  std::vector<Vector> rows;
  std::vector<int> labels;             // empty when no sidecar
  std::vector<std::string> sample_ids;  // defaults to row indices
};

std::string SidecarPath(const std::string& path);

// Rows are narrowed to float32 on write. Labels/ids are written to the
// sidecar when present.
void WriteEmbeddingFile(const std::string& path, const EmbeddingSet& set);
// Reads the sidecar if it exists.
EmbeddingSet ReadEmbeddingFile(const std::string& path);

Json HeadToJson(const ModelHead& head);
ModelHead HeadFromJson(const Json& j);

Json BankToJson(const ConceptBank& bank);
ConceptBank BankFromJson(const Json& j);

Json SpecToJson(const ScenarioSpec& spec);
// Missing keys keep their defaults.
ScenarioSpec SpecFromJson(const Json& j);

// Per-sample explanation report.
Json ExplanationToJson(const std::string& sample_id, int label,
                       const CCEResult& result, int top_k,
                       double wall_time_ms);

// learn-bank input: {concepts: [{name, positives: path, negatives: path}]};
// relative paths resolve against the manifest's directory.
std::vector<ConceptExamples> LoadConceptManifest(const std::string& path);

struct ManifestFile {
  std::string path;
  std::string kind;  // "embeddings" or "head"
  std::string sha256;
};

struct ExportManifest {
  std::string model_id;
  int layer = 0;
  std::string preprocessing;
  int dim = 0;
  std::vector<ManifestFile> files;
  std::vector<std::string> skipped;
};

ExportManifest ManifestFromJson(const Json& j);
Json ManifestToJson(const ExportManifest& manifest);
// Checks every checksum and that all embedding files and heads share the
// manifest dim. Relative paths resolve against `base_dir`.
void VerifyManifest(const ExportManifest& manifest, const std::string& base_dir);

std::string Sha256File(const std::string& path);

Json ReadJsonFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& text);

}  // namespace cce

#endif  // CCE_IO_H_
