// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "agrgan/errors.hpp"

namespace agrgan {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::string get_string(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated while reading ") + what);
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

// Profile names are stored as codes next to the numeric fields.
constexpr double kCustomProfile = 0, kDeskProfile = 1, kPaperProfile = 2;

}  // namespace

std::string encode_checkpoint(const std::vector<CheckpointTensor>& tensors) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint8_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (shape_numel(t.shape) != t.data.size()) {
      throw FormatError("tensor '" + t.name + "' payload does not match shape " + shape_str(t.shape));
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) put<std::uint64_t>(out, d);
    for (double x : t.data) put<double>(out, x);
  }
  return out;
}

std::vector<CheckpointTensor> decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.get_string(sizeof(kCheckpointMagic), "magic") != std::string(kCheckpointMagic, sizeof(kCheckpointMagic))) {
    throw FormatError("not an AGRGAN01 checkpoint (bad magic)");
  }
  auto version = in.get<std::uint8_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  auto count = in.get<std::uint32_t>("tensor count");
  std::vector<CheckpointTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    auto name_len = in.get<std::uint32_t>("name length");
    t.name = in.get_string(name_len, "name");
    auto rank = in.get<std::uint32_t>("rank");
    if (rank > 8) throw FormatError("tensor '" + t.name + "' has implausible rank " + std::to_string(rank));
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(in.get<std::uint64_t>("dims"));
    std::size_t n = shape_numel(t.shape);
    t.data.resize(n);
    for (std::size_t k = 0; k < n; ++k) t.data[k] = in.get<double>("payload");
    out.push_back(std::move(t));
  }
  if (!in.done()) throw FormatError("trailing bytes after checkpoint tensor table");
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointTensor>& tensors) {
  std::string bytes = encode_checkpoint(tensors);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw FormatError("cannot move checkpoint into '" + path.string() + "': " + ec.message());
}

std::vector<CheckpointTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

std::vector<CheckpointTensor> snapshot(const std::vector<nn::StateEntry>& entries) {
  std::vector<CheckpointTensor> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back({e.name, e.shape, {e.values.begin(), e.values.end()}});
  return out;
}

void restore(const std::vector<CheckpointTensor>& tensors, const std::vector<nn::StateEntry>& entries) {
  for (const auto& e : entries) {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const CheckpointTensor& t) { return t.name == e.name; });
    if (it == tensors.end()) throw FormatError("checkpoint is missing tensor '" + e.name + "'");
    if (it->shape != e.shape) {
      throw FormatError("tensor '" + e.name + "' has shape " + shape_str(it->shape) + " in checkpoint but model expects " +
                        shape_str(e.shape));
    }
  }
  for (const auto& e : entries) {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const CheckpointTensor& t) { return t.name == e.name; });
    std::copy(it->data.begin(), it->data.end(), e.values.begin());
  }
}

CheckpointTensor profile_tensor(const ScaleProfile& p) {
  double code = p.name == "desk" ? kDeskProfile : p.name == "paper" ? kPaperProfile : kCustomProfile;
  return {"meta.profile",
          {8},
          {code, double(p.image_size), double(p.enc_dim), double(p.repr_blocks), double(p.gen_blocks),
           double(p.dface_blocks), double(p.base_channels), double(p.max_channels)}};
}

ScaleProfile profile_from_tensor(const CheckpointTensor& t) {
  if (t.shape != Shape{8}) throw FormatError("tensor 'meta.profile' has shape " + shape_str(t.shape));
  ScaleProfile p;
  p.name = t.data[0] == kDeskProfile ? "desk" : t.data[0] == kPaperProfile ? "paper" : "custom";
  auto sz = [&](int i) { return static_cast<std::size_t>(t.data[i]); };
  p.image_size = sz(1);
  p.enc_dim = sz(2);
  p.repr_blocks = sz(3);
  p.gen_blocks = sz(4);
  p.dface_blocks = sz(5);
  p.base_channels = sz(6);
  p.max_channels = sz(7);
  p.validate();
  return p;
}

void save_agrgan(AgrGan& model, const std::filesystem::path& path) {
  auto tensors = snapshot(model.state());
  tensors.insert(tensors.begin(), profile_tensor(model.profile));
  write_checkpoint(path, tensors);
}

namespace {

const CheckpointTensor& find_meta(const std::vector<CheckpointTensor>& tensors) {
  for (const auto& t : tensors)
    if (t.name == "meta.profile") return t;
  throw FormatError("checkpoint is missing tensor 'meta.profile'");
}

}  // namespace

AgrGan load_agrgan(const std::filesystem::path& path) {
  auto tensors = read_checkpoint(path);
  AgrGan model(profile_from_tensor(find_meta(tensors)), 0);
  restore(tensors, model.state());
  return model;
}

void load_into(AgrGan& model, const std::filesystem::path& path) {
  auto tensors = read_checkpoint(path);
  ScaleProfile stored = profile_from_tensor(find_meta(tensors));
  if (!(stored == model.profile)) {
    throw FormatError("tensor 'meta.profile' mismatch: checkpoint has profile '" + stored.name + "' (" +
                      std::to_string(stored.image_size) + "px) but model is '" + model.profile.name + "' (" +
                      std::to_string(model.profile.image_size) + "px)");
  }
  restore(tensors, model.state());
}

AgrGan clone(AgrGan& model) {
  AgrGan copy(model.profile, 0);
  restore(snapshot(model.state()), copy.state());
  return copy;
}

}  // namespace agrgan
