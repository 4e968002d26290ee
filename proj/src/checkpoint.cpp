// Copyright 2026 The ftmssm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ftmssm/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "ftmssm/error.hpp"

namespace ftm {
namespace {

constexpr char kMagic[8] = {'F', 'T', 'M', 'S', 'S', 'M', 'C', 'K'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}

  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw FormatError("checkpoint is truncated at byte " + std::to_string(pos_));
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  const char* raw(std::size_t n) {
    need(n);
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

void write_model(Writer& w, const DenoiserConfig& c) {
  for (std::size_t v : {c.latent_length, c.latent_dim, c.channels, c.states, c.text_dim, c.time_embed_dim,
                        c.encoder_layers, c.middle_layers, c.decoder_layers, c.num_steps}) {
    w.u64(v);
  }
  w.u64(c.bidirectional ? 1 : 0);
  w.u64(c.long_skip ? 1 : 0);
  w.f64(c.head_scale);
}

DenoiserConfig read_model(Reader& r) {
  DenoiserConfig c;
  for (std::size_t* v : {&c.latent_length, &c.latent_dim, &c.channels, &c.states, &c.text_dim, &c.time_embed_dim,
                         &c.encoder_layers, &c.middle_layers, &c.decoder_layers, &c.num_steps}) {
    *v = static_cast<std::size_t>(r.u64());
  }
  c.bidirectional = r.u64() != 0;
  c.long_skip = r.u64() != 0;
  c.head_scale = r.f64();
  return c;
}

void write_values(Writer& w, const Tensor& t) {
  for (double d : t.vec()) w.f64(d);
}

Tensor read_values(Reader& r, const Shape& shape) {
  const std::size_t n = shape_numel(shape);
  r.need(n * 8);
  std::vector<double> v(n);
  for (auto& d : v) d = r.f64();
  // Stored tensors may legitimately be anything finite; reject the rest.
  for (double d : v) {
    if (!std::isfinite(d)) throw FormatError("checkpoint holds a non-finite value");
  }
  return Tensor(shape, std::move(v));
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u64(ckpt.root_seed);
  w.u64(ckpt.optimizer ? ckpt.optimizer->steps : 0);
  write_model(w, ckpt.model);
  w.str(ckpt.config_echo);
  const auto& entries = ckpt.params.entries();
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.str(e.name);
    w.u8(e.frozen ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) w.u64(d);
    write_values(w, e.value);
  }
  w.u8(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    FTM_REQUIRE(ckpt.optimizer->m.size() == entries.size() && ckpt.optimizer->v.size() == entries.size(),
                "save_checkpoint: optimizer state does not match the parameters");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      write_values(w, ckpt.optimizer->m[i]);
      write_values(w, ckpt.optimizer->v[i]);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractViolation("cannot open '" + path + "' for writing");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw ContractViolation("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot open checkpoint '" + path + "'");
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(buf));
  if (std::memcmp(r.raw(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("'" + path + "' is not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  ck.root_seed = r.u64();
  const std::uint64_t steps = r.u64();
  ck.model = read_model(r);
  try {
    ck.model.validate();
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("checkpoint model config is invalid: ") + e.what());
  }
  ck.config_echo = r.str();
  const std::uint32_t count = r.u32();
  std::vector<Shape> shapes;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const bool frozen = r.u8() != 0;
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw FormatError("checkpoint tensor '" + name + "' has implausible rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
    Tensor value = read_values(r, shape);
    shapes.push_back(shape);
    try {
      ck.params.add(std::move(name), std::move(value), frozen);
    } catch (const ContractViolation& e) {
      throw FormatError(std::string("checkpoint: ") + e.what());
    }
  }
  if (r.u8() != 0) {
    AdamWState st;
    st.steps = steps;
    for (const auto& s : shapes) {
      st.m.push_back(read_values(r, s));
      st.v.push_back(read_values(r, s));
    }
    ck.optimizer = std::move(st);
  }
  if (!r.at_end()) throw FormatError("checkpoint has trailing bytes");
  return ck;
}

}  // namespace ftm
