#include <cstring>
#include <fstream>

#include <json.hpp>

#include "ner/optim.hpp"

namespace ner {
namespace {

constexpr char kMagic[8] = {'N', 'E', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a(std::span<const char> bytes) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

void append_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void append_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"d_model", c.d_model},     {"n_heads", c.n_heads},
          {"n_layers", c.n_layers},   {"d_ff", c.d_ff},
          {"max_len", c.max_len},     {"dropout", c.dropout},
          {"tagset_size", c.tagset_size}, {"vocab_size", c.vocab_size},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model");
  c.n_heads = j.at("n_heads");
  c.n_layers = j.at("n_layers");
  c.d_ff = j.at("d_ff");
  c.max_len = j.at("max_len");
  c.dropout = j.at("dropout");
  c.tagset_size = j.at("tagset_size");
  c.vocab_size = j.at("vocab_size");
  c.seed = j.at("seed");
  return c;
}

// Parameter shapes implied by a config, without random init.
ModelParams empty_params(const ModelConfig& c) {
  std::size_t d = static_cast<std::size_t>(c.d_model);
  std::size_t ff = static_cast<std::size_t>(c.d_ff);
  ModelParams p;
  p.tok_emb = Matrix(c.vocab_size, d);
  p.pos_emb = Matrix(c.max_len, d);
  p.layers.resize(c.n_layers);
  for (LayerParams& layer : p.layers) {
    layer.wq = Matrix(d, d); layer.bq = Matrix(1, d);
    layer.wk = Matrix(d, d); layer.bk = Matrix(1, d);
    layer.wv = Matrix(d, d); layer.bv = Matrix(1, d);
    layer.wo = Matrix(d, d); layer.bo = Matrix(1, d);
    layer.w1 = Matrix(d, ff); layer.b1 = Matrix(1, ff);
    layer.w2 = Matrix(ff, d); layer.b2 = Matrix(1, d);
    layer.ln1_g = Matrix(1, d); layer.ln1_b = Matrix(1, d);
    layer.ln2_g = Matrix(1, d); layer.ln2_b = Matrix(1, d);
  }
  p.w_out = Matrix(d, c.tagset_size);
  p.b_out = Matrix(1, c.tagset_size);
  return p;
}

}  // namespace

void quantize_params(ModelParams& params) {
  for (const NamedTensor& nt : named_tensors(params)) {
    for (double& v : nt.tensor->data()) {
      v = static_cast<double>(static_cast<float>(v));
    }
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  ModelParams& params = const_cast<ModelParams&>(ckpt.params);
  auto tensors = named_tensors(params);

  nlohmann::json manifest = nlohmann::json::array();
  for (const NamedTensor& nt : tensors) {
    manifest.push_back({{"name", nt.name},
                        {"rows", nt.tensor->rows()},
                        {"cols", nt.tensor->cols()}});
  }
  nlohmann::json meta = {{"version", ckpt.version},
                         {"config", config_to_json(ckpt.config)},
                         {"vocab", ckpt.vocab.pieces},
                         {"tags", ckpt.tag_names},
                         {"epoch", ckpt.epoch},
                         {"dev_f1", ckpt.dev_f1},
                         {"tensors", manifest}};
  std::string meta_bytes = meta.dump();

  std::string blob;
  blob.append(kMagic, sizeof(kMagic));
  append_u32(blob, ckpt.version);
  append_u64(blob, meta_bytes.size());
  blob += meta_bytes;
  for (const NamedTensor& nt : tensors) {
    for (double v : nt.tensor->data()) {
      float f = static_cast<float>(v);
      char buf[4];
      std::memcpy(buf, &f, 4);
      blob.append(buf, 4);
    }
  }
  append_u64(blob, fnv1a(blob));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw CheckpointError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path + "'");
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  if (blob.size() < sizeof(kMagic) + 4 + 8 + 8) {
    throw CheckpointError("truncated checkpoint '" + path + "'");
  }
  if (std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("'" + path + "' is not a checkpoint file");
  }
  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, blob.data() + blob.size() - 8, 8);
  std::uint64_t actual_sum =
      fnv1a(std::span<const char>(blob.data(), blob.size() - 8));
  if (stored_sum != actual_sum) {
    throw CheckpointError("checksum mismatch in '" + path +
                          "' (truncated or corrupt)");
  }

  std::size_t pos = sizeof(kMagic);
  std::uint32_t version;
  std::memcpy(&version, blob.data() + pos, 4);
  pos += 4;
  if (version > kFormatVersion) {
    throw CheckpointError("checkpoint format version " +
                          std::to_string(version) + " is newer than supported " +
                          std::to_string(kFormatVersion));
  }
  std::uint64_t meta_len;
  std::memcpy(&meta_len, blob.data() + pos, 8);
  pos += 8;
  if (pos + meta_len + 8 > blob.size()) {
    throw CheckpointError("truncated metadata in '" + path + "'");
  }
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(blob.substr(pos, meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint metadata: ") + e.what());
  }
  pos += meta_len;

  Checkpoint ckpt;
  ckpt.version = version;
  ckpt.config = config_from_json(meta.at("config"));
  ckpt.vocab.pieces = meta.at("vocab").get<std::vector<std::string>>();
  ckpt.vocab.rebuild_index();
  ckpt.tag_names = meta.at("tags").get<std::vector<std::string>>();
  ckpt.epoch = meta.at("epoch");
  ckpt.dev_f1 = meta.at("dev_f1");
  ckpt.params = empty_params(ckpt.config);

  auto tensors = named_tensors(ckpt.params);
  const nlohmann::json& manifest = meta.at("tensors");
  if (manifest.size() != tensors.size()) {
    throw CheckpointError("tensor manifest does not match config shapes");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const nlohmann::json& entry = manifest[i];
    if (entry.at("name") != tensors[i].name ||
        entry.at("rows") != tensors[i].tensor->rows() ||
        entry.at("cols") != tensors[i].tensor->cols()) {
      throw CheckpointError("tensor '" + tensors[i].name +
                            "' shape/name mismatch");
    }
    std::size_t bytes = tensors[i].tensor->size() * 4;
    if (pos + bytes + 8 > blob.size()) {
      throw CheckpointError("truncated tensor payload in '" + path + "'");
    }
    for (double& v : tensors[i].tensor->data()) {
      float f;
      std::memcpy(&f, blob.data() + pos, 4);
      pos += 4;
      v = static_cast<double>(f);
    }
  }
  if (pos + 8 != blob.size()) {
    throw CheckpointError("trailing bytes in '" + path + "'");
  }
  return ckpt;
}

}  // namespace ner
