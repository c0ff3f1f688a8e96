// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "io/checkpoint.hpp"

#include "errors.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace autodrag {

namespace {

class Writer {
 public:
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 8);
  }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void matrix(const std::string& name, const Matrix& m) {
    str(name);
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, m.data() + i, 8);
      u64(bits);
    }
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  void raw(void* p, std::size_t n) {
    if (pos_ + n > in_.size()) throw FormatError("checkpoint truncated");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    raw(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    raw(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > in_.size() - pos_) throw FormatError("checkpoint string length out of range");
    std::string s(in_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  Matrix matrix(std::string& name) {
    name = str();
    const std::uint32_t r = u32();
    const std::uint32_t c = u32();
    if (static_cast<std::uint64_t>(r) * c * 8 > in_.size() - pos_) throw FormatError("checkpoint matrix too large");
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const std::uint64_t bits = u64();
      std::memcpy(m.data() + i, &bits, 8);
    }
    return m;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

void write_store(Writer& w, const std::string& prefix, const ag::ParameterStore& store) {
  for (const ag::Parameter* p : store.all()) w.matrix(prefix + p->name, p->value);
}

void read_store(std::map<std::string, Matrix>& sections, const std::string& prefix, ag::ParameterStore& store) {
  for (ag::Parameter* p : store.all()) {
    auto it = sections.find(prefix + p->name);
    if (it == sections.end()) throw FormatError("checkpoint lacks " + prefix + p->name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
      throw FormatError("checkpoint shape mismatch for " + prefix + p->name);
    }
    p->value = std::move(it->second);
    sections.erase(it);
  }
}

Eigen::Vector4d as_vec4(const Matrix& m, const std::string& name) {
  if (m.size() != 4) throw FormatError("checkpoint: " + name + " must hold 4 values");
  return Eigen::Vector4d(m.data()[0], m.data()[1], m.data()[2], m.data()[3]);
}

}  // namespace

ModelBundle ModelBundle::create(const RunConfig& config, bool with_regularizer, bool with_predictor) {
  ModelBundle b;
  b.config = config;
  b.config.normalise();
  b.generator = std::make_unique<ToyGenerator>(b.config.generator);
  if (with_regularizer) b.regularizer = std::make_unique<RegularizerModel>(b.config.regularizer);
  if (with_predictor) b.predictor = std::make_unique<PredictorModel>(b.config.predictor);
  return b;
}

std::string serialize_checkpoint(const ModelBundle& bundle) {
  if (!bundle.generator) throw StateError("checkpoint needs a generator");
  Writer w;
  w.raw(kCheckpointMagic, 8);
  for (int v : kCheckpointVersion) w.u32(static_cast<std::uint32_t>(v));
  w.str(config_to_json(bundle.config));
  std::uint32_t flags = 0;
  if (bundle.regularizer) flags |= 1u;
  if (bundle.predictor) flags |= 2u;
  w.u32(flags);
  const ToyGenerator& g = *bundle.generator;
  const auto& maps = g.mapping_weights();
  for (std::size_t l = 0; l < maps.size(); ++l) w.matrix("generator/mapping." + std::to_string(l), maps[l]);
  w.matrix("generator/bias", g.mapping_bias());
  w.matrix("generator/spatial", g.spatial_readout());
  w.matrix("generator/spatial_offset", Matrix(g.spatial_offset().transpose()));
  w.matrix("generator/appearance", g.appearance_readout());
  w.matrix("generator/appearance_offset", Matrix(g.appearance_offset().transpose()));
  if (bundle.regularizer) write_store(w, "regularizer/", bundle.regularizer->params());
  if (bundle.predictor) write_store(w, "predictor/", bundle.predictor->params());
  return w.take();
}

ModelBundle deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) throw FormatError("not an autodrag checkpoint (bad magic)");
  std::uint32_t version[3];
  for (auto& v : version) v = r.u32();
  if (version[0] != static_cast<std::uint32_t>(kCheckpointVersion[0])) {
    throw FormatError("unsupported checkpoint major version " + std::to_string(version[0]));
  }
  ModelBundle b;
  b.config = config_from_json(r.str());
  const std::uint32_t flags = r.u32();
  std::map<std::string, Matrix> sections;
  while (!r.done()) {
    std::string name;
    Matrix m = r.matrix(name);
    if (!sections.emplace(name, std::move(m)).second) throw FormatError("duplicate checkpoint section " + name);
  }
  auto take = [&](const std::string& name) {
    auto it = sections.find(name);
    if (it == sections.end()) throw FormatError("checkpoint lacks " + name);
    Matrix m = std::move(it->second);
    sections.erase(it);
    return m;
  };
  const GeneratorConfig& gc = b.config.generator;
  std::vector<Matrix> maps;
  for (int l = 0; l < gc.layers; ++l) maps.push_back(take("generator/mapping." + std::to_string(l)));
  Matrix bias = take("generator/bias");
  Matrix spatial = take("generator/spatial");
  const Eigen::Vector4d spatial_offset = as_vec4(take("generator/spatial_offset"), "spatial_offset");
  Matrix appearance = take("generator/appearance");
  const Eigen::Vector4d appearance_offset = as_vec4(take("generator/appearance_offset"), "appearance_offset");
  b.generator = std::make_unique<ToyGenerator>(ToyGenerator::from_weights(
      gc, std::move(maps), std::move(bias), std::move(spatial), spatial_offset, std::move(appearance), appearance_offset));
  if (flags & 1u) {
    b.regularizer = std::make_unique<RegularizerModel>(b.config.regularizer);
    read_store(sections, "regularizer/", b.regularizer->params());
  }
  if (flags & 2u) {
    b.predictor = std::make_unique<PredictorModel>(b.config.predictor);
    read_store(sections, "predictor/", b.predictor->params());
  }
  if (!sections.empty()) throw FormatError("checkpoint has unexpected section " + sections.begin()->first);
  return b;
}

void save_checkpoint(const std::string& path, const ModelBundle& bundle) {
  const std::string bytes = serialize_checkpoint(bundle);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path);
}

ModelBundle load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace autodrag
