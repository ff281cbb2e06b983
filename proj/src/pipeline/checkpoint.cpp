/*
 * Copyright 2026 The munmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pipeline/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "common/digest.hpp"
#include "common/error.hpp"

namespace munmt::pipeline {

namespace {

constexpr char kMagic[4] = {'M', 'U', 'N', 'M'};
constexpr std::uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void tensor(const std::string& name, const tensor::Tensor<float>& t) {
    bytes(name);
    put(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put(static_cast<std::uint64_t>(d));
    out_.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::pair<std::string, tensor::Tensor<float>> tensor() {
    auto name = bytes();
    const auto rank = get<std::uint32_t>();
    if (rank > 8) fail(ErrorKind::Data, "checkpoint: implausible rank for " + name);
    tensor::Shape shape;
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto d = get<std::uint64_t>();
      if (d > (std::uint64_t{1} << 32)) fail(ErrorKind::Data, "checkpoint: implausible dim for " + name);
      shape.push_back(static_cast<std::size_t>(d));
      count *= static_cast<std::size_t>(d);
    }
    need(count * sizeof(float));
    std::vector<float> data(count);
    std::memcpy(data.data(), in_.data() + pos_, count * sizeof(float));
    pos_ += count * sizeof(float);
    return {std::move(name), tensor::Tensor<float>(std::move(shape), std::move(data))};
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail(ErrorKind::Data, "checkpoint: truncated file");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

const char* stage_tag_name(StageTag tag) {
  switch (tag) {
    case StageTag::Init: return "init";
    case StageTag::Stage1: return "stage1";
    case StageTag::Stage2a: return "stage2a";
    case StageTag::Stage2b: return "stage2b";
    case StageTag::Stage3: return "stage3";
  }
  return "?";
}

std::string serialize_checkpoint(const Checkpoint& c) {
  const bool has_optim = !c.optim.first.empty();
  if (has_optim && (c.optim.first.size() != c.params.size() || c.optim.second.size() != c.params.size())) {
    fail(ErrorKind::Internal, "checkpoint: optimizer state does not match parameters");
  }
  Writer w;
  for (char ch : kMagic) w.put(ch);
  w.put(kVersion);
  w.put(static_cast<std::uint8_t>(c.stage));
  w.put(static_cast<std::uint8_t>(c.optim.kind));
  w.put(c.global_step);
  w.put(c.stage_step);
  w.put(c.optim.step);
  w.bytes(c.vocab_digest);
  w.bytes(c.config_digest);
  const auto n = c.params.size();
  w.put(static_cast<std::uint32_t>(has_optim ? 3 * n : n));
  for (std::size_t i = 0; i < n; ++i) w.tensor(c.params.name(i), c.params.value(i));
  if (has_optim) {
    for (std::size_t i = 0; i < n; ++i) w.tensor("opt.m." + c.params.name(i), c.optim.first[i]);
    for (std::size_t i = 0; i < n; ++i) w.tensor("opt.v." + c.params.name(i), c.optim.second[i]);
  }
  return w.take();
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  for (char ch : kMagic) {
    if (r.get<char>() != ch) fail(ErrorKind::Data, "checkpoint: bad magic");
  }
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion) {
    fail(ErrorKind::Data, "checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  const auto stage = r.get<std::uint8_t>();
  if (stage > static_cast<std::uint8_t>(StageTag::Stage3)) fail(ErrorKind::Data, "checkpoint: bad stage tag");
  c.stage = static_cast<StageTag>(stage);
  const auto kind = r.get<std::uint8_t>();
  if (kind > 1) fail(ErrorKind::Data, "checkpoint: bad optimizer kind");
  c.optim.kind = static_cast<tensor::OptimizerKind>(kind);
  c.global_step = r.get<std::uint64_t>();
  c.stage_step = r.get<std::uint64_t>();
  c.optim.step = r.get<std::uint64_t>();
  c.vocab_digest = r.bytes();
  c.config_digest = r.bytes();
  const auto count = r.get<std::uint32_t>();
  std::vector<std::pair<std::string, tensor::Tensor<float>>> tensors;
  for (std::uint32_t i = 0; i < count; ++i) tensors.push_back(r.tensor());
  if (!r.done()) fail(ErrorKind::Data, "checkpoint: trailing bytes");

  std::size_t n = 0;
  while (n < tensors.size() && tensors[n].first.rfind("opt.", 0) != 0) ++n;
  if (tensors.size() != n && tensors.size() != 3 * n) {
    fail(ErrorKind::Data, "checkpoint: optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < n; ++i) c.params.add(tensors[i].first, std::move(tensors[i].second));
  if (tensors.size() == 3 * n && n > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& m = tensors[n + i];
      const auto& v = tensors[2 * n + i];
      if (m.first != "opt.m." + c.params.name(i) || v.first != "opt.v." + c.params.name(i) ||
          m.second.shape() != c.params.value(i).shape() ||
          v.second.shape() != c.params.value(i).shape()) {
        fail(ErrorKind::Data, "checkpoint: optimizer entry mismatch for " + c.params.name(i));
      }
      c.optim.first.push_back(m.second);
      c.optim.second.push_back(v.second);
    }
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return parse_checkpoint(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Data) fail(ErrorKind::Data, path.string() + ": " + e.what());
    throw;
  }
}

void check_compatible(const Checkpoint& ckpt, const std::string& vocab_digest,
                      const std::string& config_digest) {
  if (ckpt.vocab_digest != vocab_digest) {
    fail(ErrorKind::Data, "checkpoint was trained with a different vocabulary");
  }
  if (ckpt.config_digest != config_digest) {
    fail(ErrorKind::Data, "checkpoint was trained with a different model configuration");
  }
}

}  // namespace munmt::pipeline
