// Copyright 2026 The coopgan Authors. All Rights Reserved.
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

#include "coopgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "coopgan/errors.hpp"

namespace coopgan {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'O', 'O', 'P', 'G', 'A', 'N', '\0'};

struct Entry {
  std::string name;
  const Array* array;
};

void add_set(std::vector<Entry>& out, const std::string& prefix, const ParamSet& set) {
  for (std::size_t i = 0; i < set.size(); ++i) out.push_back({prefix + set.names[i], &set.values[i]});
}

void add_opt(std::vector<Entry>& out, const std::string& prefix, const ParamSet& set, const AdamState& st) {
  for (std::size_t i = 0; i < st.m.size(); ++i) out.push_back({prefix + "m/" + set.names[i], &st.m[i]});
  for (std::size_t i = 0; i < st.v.size(); ++i) out.push_back({prefix + "v/" + set.names[i], &st.v[i]});
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}

nlohmann::ordered_json opt_json(const AdamState& s) { return {{"t", s.t}, {"slots", s.m.size()}}; }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg, const TrainState& state,
                     const std::optional<data::Vocab>& vocab) {
  std::vector<Entry> entries;
  add_set(entries, "generator/", state.generator.params);
  add_set(entries, "lm/", state.lm.params);
  add_set(entries, "disc/", state.disc.params);
  add_opt(entries, "gen_opt/", state.generator.params, state.gen_opt);
  add_opt(entries, "disc_opt/", state.disc.params, state.disc_opt);
  add_opt(entries, "lm_opt/", state.lm.params, state.lm_opt);

  nlohmann::ordered_json h;
  h["format"] = "coopgan-checkpoint";
  h["version"] = kCheckpointVersion;
  h["config"] = cfg.to_json();
  h["config_hash"] = cfg.hash();
  h["phase"] = to_string(state.phase);
  h["pretrain_epoch"] = state.pretrain_epoch;
  h["epoch"] = state.epoch;
  h["lm_reference"] = state.lm_reference ? nlohmann::ordered_json(*state.lm_reference) : nlohmann::ordered_json();
  h["skipped"] = state.skipped;
  h["generator_shape"] = {state.generator.shape.vocab, state.generator.shape.embed, state.generator.shape.hidden};
  h["lm_shape"] = {state.lm.shape.vocab, state.lm.shape.embed, state.lm.shape.hidden};
  const auto& d = state.disc.shape;
  h["disc_shape"] = {d.vocab, d.embed, d.channels, d.kernel1, d.kernel2};
  h["gen_opt"] = opt_json(state.gen_opt);
  h["disc_opt"] = opt_json(state.disc_opt);
  h["lm_opt"] = opt_json(state.lm_opt);
  if (vocab) {
    h["vocab"] = vocab->tokens();
    h["vocab_fingerprint"] = vocab->fingerprint();
  } else {
    h["vocab"] = nullptr;
  }
  auto& index = h["arrays"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) index.push_back({{"name", e.name}, {"shape", e.array->shape()}});
  const std::string header = h.dump();

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot write " + tmp);
    out.write(kMagic, sizeof kMagic);
    write_pod<std::uint32_t>(out, kCheckpointVersion);
    write_pod<std::uint64_t>(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& e : entries) {
      auto data = e.array->data();
      out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
    if (!out) throw IoError("checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError("checkpoint: bad magic in " + path.string());
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto header_size = read_pod<std::uint64_t>(in);
  if (header_size > (1ull << 32)) throw IoError("checkpoint: implausible header size");
  std::string header(header_size, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_size));
  if (!in) throw IoError("checkpoint: truncated header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: corrupt header: ") + e.what());
  }

  Checkpoint ck;
  ck.config = config_from_json(h.at("config"));
  if (ck.config.hash() != h.at("config_hash").get<std::uint64_t>()) {
    throw IoError("checkpoint: config hash does not match the stored config");
  }
  if (!h.at("vocab").is_null()) {
    ck.vocab = data::Vocab::from_tokens(h.at("vocab").get<std::vector<std::string>>());
    if (ck.vocab->fingerprint() != h.at("vocab_fingerprint").get<std::uint64_t>()) {
      throw IoError("checkpoint: vocabulary fingerprint mismatch");
    }
  }

  std::map<std::string, Array> arrays;
  for (const auto& e : h.at("arrays")) {
    Shape shape = e.at("shape").get<Shape>();
    std::vector<double> values(shape_size(shape));
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint: truncated array data");
    arrays.emplace(e.at("name").get<std::string>(), Array(shape, std::move(values)));
  }
  if (in.peek() != std::ifstream::traits_type::eof()) throw IoError("checkpoint: trailing bytes");

  auto take = [&](const std::string& name) {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw IoError("checkpoint: missing array " + name);
    return it->second;
  };

  // Rebuild parameter sets from freshly shaped templates so names and order
  // come from the code, not the file.
  TrainState& s = ck.state;
  auto gs = h.at("generator_shape").get<std::vector<std::size_t>>();
  auto ls = h.at("lm_shape").get<std::vector<std::size_t>>();
  auto ds = h.at("disc_shape").get<std::vector<std::size_t>>();
  Rng dummy(0);
  s.generator = SeqModel::random({gs.at(0), gs.at(1), gs.at(2)}, dummy, 0.0);
  s.lm = SeqModel::random({ls.at(0), ls.at(1), ls.at(2)}, dummy, 0.0);
  s.disc = Discriminator::random({ds.at(0), ds.at(1), ds.at(2), ds.at(3), ds.at(4)}, dummy);
  auto fill = [&](ParamSet& set, const std::string& prefix) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      Array a = take(prefix + set.names[i]);
      if (a.shape() != set.values[i].shape()) throw IoError("checkpoint: shape mismatch for " + prefix + set.names[i]);
      set.values[i] = std::move(a);
    }
  };
  fill(s.generator.params, "generator/");
  fill(s.lm.params, "lm/");
  fill(s.disc.params, "disc/");
  auto fill_opt = [&](AdamState& st, const ParamSet& set, const std::string& prefix, const nlohmann::json& meta) {
    st.t = meta.at("t").get<std::size_t>();
    const auto slots = meta.at("slots").get<std::size_t>();
    if (slots == 0) return;
    if (slots != set.size()) throw IoError("checkpoint: optimizer slot count mismatch for " + prefix);
    for (std::size_t i = 0; i < slots; ++i) st.m.push_back(take(prefix + "m/" + set.names[i]));
    for (std::size_t i = 0; i < slots; ++i) st.v.push_back(take(prefix + "v/" + set.names[i]));
  };
  fill_opt(s.gen_opt, s.generator.params, "gen_opt/", h.at("gen_opt"));
  fill_opt(s.disc_opt, s.disc.params, "disc_opt/", h.at("disc_opt"));
  fill_opt(s.lm_opt, s.lm.params, "lm_opt/", h.at("lm_opt"));
  s.phase = parse_phase(h.at("phase").get<std::string>());
  s.pretrain_epoch = h.at("pretrain_epoch").get<std::size_t>();
  s.epoch = h.at("epoch").get<std::size_t>();
  if (!h.at("lm_reference").is_null()) s.lm_reference = h.at("lm_reference").get<double>();
  s.skipped = h.at("skipped").get<std::size_t>();
  return ck;
}

}  // namespace coopgan
