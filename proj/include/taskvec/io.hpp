// Copyright 2026 The taskvec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "taskvec/codec.hpp"
#include "taskvec/data.hpp"
#include "taskvec/model.hpp"

namespace taskvec {

// Corpus directory layout:
//   manifest.json        {"format", "gen_config", "codec", "splits", "frames", "hash"}
//   <split>.jsonl        one utterance per line
//   frames.bin           frame sidecar referenced by "frames_ref"
//
// Utterance record fields: "id", "frames_ref" {"path", "index"} or inline
// "frames" (array of rows), "words", "available" (task names), and, when the
// task is available, "lang", "scd_gaps", "ep_gaps", "spans"
// ([{"type", "begin", "end"}]).
//
// frames.bin: "TVFR", u32 version, u32 dim, u64 count, then count index
// entries (u64 byte offset of the payload, u32 rows, u32 reserved), then
// row-major little-endian float32 payloads.

nlohmann::json UtteranceToJson(const AnnotatedUtterance &utt);
// `frames` fills frames_ref lookups; pass nullptr to require inline frames.
AnnotatedUtterance UtteranceFromJson(const nlohmann::json &j,
                                     const std::vector<FeatureMatrix> *frames);

void to_json(nlohmann::json &j, const CodecConfig &c);
void from_json(const nlohmann::json &j, CodecConfig &c);

void WriteFrames(const std::filesystem::path &path, const std::vector<const FeatureMatrix *> &frames);
std::vector<FeatureMatrix> ReadFrames(const std::filesystem::path &path);

struct CorpusFiles {
  Corpus corpus;
  GenConfig gen_config;
  std::string hash;  // 16 hex digits of 64-bit FNV-1a over the data files
};

// Writes the corpus into `dir` (created if absent) and returns its hash.
std::string WriteCorpus(const Corpus &corpus, const GenConfig &gen, const std::filesystem::path &dir);
CorpusFiles ReadCorpus(const std::filesystem::path &dir);

uint64_t Fnv1a64(const void *data, size_t size, uint64_t h = 0xcbf29ce484222325ull);

// Checkpoint container: "TVCK", u32 version, u64 manifest length, JSON
// manifest, then little-endian float32 tensor payloads. The manifest holds
// "model" (ModelConfig), "codec" (CodecConfig), "tensors" ([{"name", "shape",
// "dtype", "offset"}], offsets relative to the payload start) and "extra".
void to_json(nlohmann::json &j, const ModelConfig &c);
void from_json(const nlohmann::json &j, ModelConfig &c);

struct Checkpoint {
  TransducerModel model;
  CodecConfig codec;
  nlohmann::json extra;
};

void SaveCheckpoint(const std::filesystem::path &path, const TransducerModel &model,
                    const CodecConfig &codec, const nlohmann::json &extra = nlohmann::json::object());
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

std::string ReadTextFile(const std::filesystem::path &path);
void WriteTextFile(const std::filesystem::path &path, const std::string &text);
nlohmann::json ReadJsonFile(const std::filesystem::path &path);

}  // namespace taskvec
