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

#include "taskvec/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "taskvec/error.hpp"

namespace taskvec {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kFramesMagic[4] = {'T', 'V', 'F', 'R'};
constexpr char kCheckpointMagic[4] = {'T', 'V', 'C', 'K'};
constexpr uint32_t kFormatVersion = 1;
constexpr const char *kFramesFile = "frames.bin";

template <typename T>
void WritePod(std::ostream &os, const T &v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T ReadPod(std::istream &is, const fs::path &path) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!is) ThrowRuntime("truncated file: " + path.string());
  return v;
}

std::ifstream OpenIn(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowRuntime("cannot open " + path.string());
  return in;
}

std::ofstream OpenOut(const fs::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) ThrowRuntime("cannot write " + path.string());
  return out;
}

std::vector<std::string> TaskNames(TaskSet set) {
  std::vector<std::string> out;
  for (int b = 0; b <= kNumAuxTasks; ++b)
    if (set.ContainsBit(b)) out.emplace_back(TaskName(static_cast<TaskId>(b)));
  return out;
}

std::string Hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t HashFile(const fs::path &path, uint64_t h) {
  const std::string bytes = ReadTextFile(path);
  return Fnv1a64(bytes.data(), bytes.size(), h);
}

}  // namespace

uint64_t Fnv1a64(const void *data, size_t size, uint64_t h) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string ReadTextFile(const fs::path &path) {
  std::ifstream in = OpenIn(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void WriteTextFile(const fs::path &path, const std::string &text) {
  std::ofstream out = OpenOut(path);
  out << text;
  if (!out) ThrowRuntime("write failed: " + path.string());
}

json ReadJsonFile(const fs::path &path) {
  if (!fs::exists(path)) ThrowUsage("file not found: " + path.string());
  try {
    return json::parse(ReadTextFile(path));
  } catch (const json::parse_error &e) {
    ThrowUsage("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void to_json(json &j, const CodecConfig &c) {
  j = json{{"languages", c.languages}, {"entity_types", c.entity_types}, {"lexicons", c.lexicons}};
}

void from_json(const json &j, CodecConfig &c) {
  j.at("languages").get_to(c.languages);
  j.at("entity_types").get_to(c.entity_types);
  j.at("lexicons").get_to(c.lexicons);
}

json UtteranceToJson(const AnnotatedUtterance &utt) {
  json j;
  j["id"] = utt.id;
  j["words"] = utt.words;
  if (utt.language) j["lang"] = *utt.language;
  if (utt.scd_gaps) j["scd_gaps"] = *utt.scd_gaps;
  if (utt.ep_gaps) j["ep_gaps"] = *utt.ep_gaps;
  if (utt.spans) {
    json spans = json::array();
    for (const auto &s : *utt.spans)
      spans.push_back({{"type", s.type}, {"begin", s.begin}, {"end", s.end}});
    j["spans"] = std::move(spans);
  }
  j["available"] = TaskNames(utt.available);
  return j;
}

AnnotatedUtterance UtteranceFromJson(const json &j, const std::vector<FeatureMatrix> *frames) {
  AnnotatedUtterance utt;
  try {
    j.at("id").get_to(utt.id);
    j.at("words").get_to(utt.words);
    if (j.contains("lang")) utt.language = j.at("lang").get<std::string>();
    if (j.contains("scd_gaps")) utt.scd_gaps = j.at("scd_gaps").get<std::vector<int>>();
    if (j.contains("ep_gaps")) utt.ep_gaps = j.at("ep_gaps").get<std::vector<int>>();
    if (j.contains("spans")) {
      utt.spans.emplace();
      for (const auto &s : j.at("spans"))
        utt.spans->push_back({s.at("type").get<std::string>(), s.at("begin").get<int>(),
                              s.at("end").get<int>()});
    }
    std::string avail;
    for (const auto &name : j.at("available")) {
      if (!avail.empty()) avail += ',';
      avail += name.get<std::string>();
    }
    utt.available = TaskSet::Parse(avail);
    if (j.contains("frames")) {
      const auto rows = j.at("frames").get<std::vector<std::vector<float>>>();
      utt.frames.rows = static_cast<int>(rows.size());
      utt.frames.cols = rows.empty() ? 0 : static_cast<int>(rows[0].size());
      for (const auto &r : rows) {
        if (static_cast<int>(r.size()) != utt.frames.cols)
          ThrowRuntime("utterance " + utt.id + ": ragged inline frames");
        utt.frames.data.insert(utt.frames.data.end(), r.begin(), r.end());
      }
    } else {
      const size_t index = j.at("frames_ref").at("index").get<size_t>();
      if (!frames || index >= frames->size())
        ThrowRuntime("utterance " + utt.id + ": frames_ref index out of range");
      utt.frames = (*frames)[index];
    }
  } catch (const json::exception &e) {
    ThrowRuntime("malformed utterance record: " + std::string(e.what()));
  }
  ValidateUtterance(utt);
  return utt;
}

void WriteFrames(const fs::path &path, const std::vector<const FeatureMatrix *> &frames) {
  std::ofstream out = OpenOut(path);
  const uint32_t dim = frames.empty() ? 0u : static_cast<uint32_t>(frames[0]->cols);
  out.write(kFramesMagic, 4);
  WritePod(out, kFormatVersion);
  WritePod(out, dim);
  WritePod(out, static_cast<uint64_t>(frames.size()));
  uint64_t offset = 4 + 4 + 4 + 8 + frames.size() * 16;
  for (const FeatureMatrix *f : frames) {
    if (static_cast<uint32_t>(f->cols) != dim) ThrowRuntime("frames: mixed feature dims");
    WritePod(out, offset);
    WritePod(out, static_cast<uint32_t>(f->rows));
    WritePod(out, uint32_t{0});
    offset += f->data.size() * sizeof(float);
  }
  for (const FeatureMatrix *f : frames)
    out.write(reinterpret_cast<const char *>(f->data.data()),
              static_cast<std::streamsize>(f->data.size() * sizeof(float)));
  if (!out) ThrowRuntime("write failed: " + path.string());
}

std::vector<FeatureMatrix> ReadFrames(const fs::path &path) {
  std::ifstream in = OpenIn(path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kFramesMagic, 4) != 0)
    ThrowRuntime("not a frames file: " + path.string());
  if (ReadPod<uint32_t>(in, path) != kFormatVersion)
    ThrowRuntime("unsupported frames version: " + path.string());
  const uint32_t dim = ReadPod<uint32_t>(in, path);
  const uint64_t count = ReadPod<uint64_t>(in, path);
  std::vector<std::pair<uint64_t, uint32_t>> index(count);
  for (auto &[offset, rows] : index) {
    offset = ReadPod<uint64_t>(in, path);
    rows = ReadPod<uint32_t>(in, path);
    ReadPod<uint32_t>(in, path);
  }
  std::vector<FeatureMatrix> out(count);
  for (uint64_t i = 0; i < count; ++i) {
    FeatureMatrix &f = out[i];
    f.rows = static_cast<int>(index[i].second);
    f.cols = static_cast<int>(dim);
    f.data.resize(static_cast<size_t>(f.rows) * f.cols);
    in.seekg(static_cast<std::streamoff>(index[i].first));
    in.read(reinterpret_cast<char *>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(float)));
    if (!in) ThrowRuntime("truncated frames file: " + path.string());
  }
  return out;
}

std::string WriteCorpus(const Corpus &corpus, const GenConfig &gen, const fs::path &dir) {
  fs::create_directories(dir);
  std::vector<const FeatureMatrix *> frames;
  json splits = json::object();
  for (Split s : kAllSplits) {
    const std::string name(SplitName(s));
    std::ofstream out = OpenOut(dir / (name + ".jsonl"));
    for (const auto &utt : corpus.split(s)) {
      json j = UtteranceToJson(utt);
      j["frames_ref"] = {{"path", kFramesFile}, {"index", frames.size()}};
      frames.push_back(&utt.frames);
      out << j.dump() << '\n';
    }
    if (!out) ThrowRuntime("write failed: " + (dir / (name + ".jsonl")).string());
    splits[name] = {{"file", name + ".jsonl"}, {"utterances", corpus.split(s).size()}};
  }
  WriteFrames(dir / kFramesFile, frames);

  uint64_t h = 0xcbf29ce484222325ull;
  for (Split s : kAllSplits) h = HashFile(dir / (std::string(SplitName(s)) + ".jsonl"), h);
  h = HashFile(dir / kFramesFile, h);
  const std::string hash = Hex64(h);

  json manifest;
  manifest["format"] = "taskvec-corpus";
  manifest["version"] = kFormatVersion;
  manifest["gen_config"] = gen;
  manifest["codec"] = corpus.codec;
  manifest["splits"] = splits;
  manifest["frames"] = kFramesFile;
  manifest["hash"] = hash;
  WriteTextFile(dir / "manifest.json", manifest.dump(2) + "\n");
  return hash;
}

CorpusFiles ReadCorpus(const fs::path &dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) ThrowUsage("not a corpus directory: " + dir.string());
  const json manifest = ReadJsonFile(manifest_path);
  CorpusFiles out;
  try {
    out.corpus.codec = manifest.at("codec").get<CodecConfig>();
    if (manifest.contains("gen_config")) out.gen_config = manifest.at("gen_config").get<GenConfig>();
  } catch (const json::exception &e) {
    ThrowRuntime("corpus manifest: " + std::string(e.what()));
  }
  const fs::path frames_path = dir / manifest.value("frames", std::string(kFramesFile));
  std::vector<FeatureMatrix> frames;
  if (fs::exists(frames_path)) frames = ReadFrames(frames_path);

  uint64_t h = 0xcbf29ce484222325ull;
  for (Split s : kAllSplits) {
    const fs::path path = dir / (std::string(SplitName(s)) + ".jsonl");
    if (!fs::exists(path)) continue;
    const std::string text = ReadTextFile(path);
    h = Fnv1a64(text.data(), text.size(), h);
    std::istringstream lines(text);
    std::string line;
    auto &split = out.corpus.split(s);
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error &e) {
        ThrowRuntime(path.string() + ": " + e.what());
      }
      split.push_back(UtteranceFromJson(j, &frames));
    }
  }
  if (fs::exists(frames_path)) h = HashFile(frames_path, h);
  out.hash = Hex64(h);
  if (manifest.contains("hash") && manifest["hash"].get<std::string>() != out.hash)
    ThrowRuntime("corpus hash mismatch in " + dir.string() + " (files modified?)");
  return out;
}

void to_json(json &j, const ModelConfig &c) {
  j = json{{"input_dim", c.input_dim},
           {"embed_dim", c.embed_dim},
           {"conv_strides", c.conv_strides},
           {"conv_kernel", c.conv_kernel},
           {"context_layers", c.context_layers},
           {"pred_hidden", c.pred_hidden},
           {"pred_context", c.pred_context},
           {"joint_dim", c.joint_dim},
           {"num_symbols", c.num_symbols},
           {"strategy", ToString(c.strategy)},
           {"position", ToString(c.position)},
           {"num_aux", c.num_aux},
           {"seed", c.seed}};
}

void from_json(const json &j, ModelConfig &c) {
  j.at("input_dim").get_to(c.input_dim);
  j.at("embed_dim").get_to(c.embed_dim);
  j.at("conv_strides").get_to(c.conv_strides);
  j.at("conv_kernel").get_to(c.conv_kernel);
  j.at("context_layers").get_to(c.context_layers);
  j.at("pred_hidden").get_to(c.pred_hidden);
  j.at("pred_context").get_to(c.pred_context);
  j.at("joint_dim").get_to(c.joint_dim);
  j.at("num_symbols").get_to(c.num_symbols);
  c.strategy = ParseStrategy(j.at("strategy").get<std::string>());
  c.position = ParsePosition(j.at("position").get<std::string>());
  j.at("num_aux").get_to(c.num_aux);
  j.at("seed").get_to(c.seed);
}

void SaveCheckpoint(const fs::path &path, const TransducerModel &model, const CodecConfig &codec,
                    const json &extra) {
  json manifest;
  manifest["model"] = model.config();
  manifest["codec"] = codec;
  manifest["extra"] = extra;
  json tensors = json::array();
  uint64_t offset = 0;
  const auto params = model.Parameters();
  for (const auto &p : params) {
    tensors.push_back({{"name", p.name},
                       {"shape", {p.value->rows(), p.value->cols()}},
                       {"dtype", "f32"},
                       {"offset", offset}});
    offset += static_cast<uint64_t>(p.value->size()) * sizeof(float);
  }
  manifest["tensors"] = std::move(tensors);
  const std::string text = manifest.dump();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out = OpenOut(path);
  out.write(kCheckpointMagic, 4);
  WritePod(out, kFormatVersion);
  WritePod(out, static_cast<uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::vector<float> buf;
  for (const auto &p : params) {
    buf.resize(p.value->size());
    for (Eigen::Index i = 0; i < p.value->size(); ++i)
      buf[i] = static_cast<float>(p.value->data()[i]);
    out.write(reinterpret_cast<const char *>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) ThrowRuntime("write failed: " + path.string());
}

Checkpoint LoadCheckpoint(const fs::path &path) {
  if (!fs::exists(path)) ThrowUsage("checkpoint not found: " + path.string());
  std::ifstream in = OpenIn(path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    ThrowRuntime("not a checkpoint: " + path.string());
  if (ReadPod<uint32_t>(in, path) != kFormatVersion)
    ThrowRuntime("unsupported checkpoint version: " + path.string());
  const uint64_t len = ReadPod<uint64_t>(in, path);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) ThrowRuntime("truncated checkpoint: " + path.string());
  const std::streamoff payload = in.tellg();

  json manifest;
  ModelConfig config;
  CodecConfig codec;
  try {
    manifest = json::parse(text);
    config = manifest.at("model").get<ModelConfig>();
    codec = manifest.at("codec").get<CodecConfig>();
  } catch (const json::exception &e) {
    ThrowRuntime("checkpoint manifest: " + std::string(e.what()));
  }
  Checkpoint ck{TransducerModel(config), std::move(codec), manifest.value("extra", json::object())};

  std::map<std::string, json> by_name;
  for (const auto &t : manifest.at("tensors")) by_name[t.at("name").get<std::string>()] = t;
  std::vector<float> buf;
  for (auto &p : ck.model.Parameters()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) ThrowRuntime("checkpoint lacks tensor " + p.name);
    const auto shape = it->second.at("shape").get<std::vector<int64_t>>();
    if (shape.size() != 2 || shape[0] != p.value->rows() || shape[1] != p.value->cols())
      ThrowRuntime("checkpoint tensor " + p.name + " has the wrong shape");
    if (it->second.at("dtype").get<std::string>() != "f32")
      ThrowRuntime("checkpoint tensor " + p.name + ": unsupported dtype");
    buf.resize(p.value->size());
    in.seekg(payload + static_cast<std::streamoff>(it->second.at("offset").get<uint64_t>()));
    in.read(reinterpret_cast<char *>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) ThrowRuntime("truncated checkpoint payload: " + path.string());
    for (Eigen::Index i = 0; i < p.value->size(); ++i) p.value->data()[i] = buf[i];
    by_name.erase(it);
  }
  if (!by_name.empty()) ThrowRuntime("checkpoint has unexpected tensor " + by_name.begin()->first);
  return ck;
}

}  // namespace taskvec
