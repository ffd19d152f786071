#include "prdesc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "prdesc/errors.hpp"

namespace prdesc {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return json{{"emb_dim", c.emb_dim},
              {"hidden_dim", c.hidden_dim},
              {"vocab_size", c.vocab_size},
              {"max_src_len", c.max_src_len},
              {"max_tgt_len", c.max_tgt_len}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.emb_dim = j.value("emb_dim", c.emb_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.max_src_len = j.value("max_src_len", c.max_src_len);
    c.max_tgt_len = j.value("max_tgt_len", c.max_tgt_len);
  } catch (const json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

void write_le(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xFF);
  out.write(bytes, 8);
}

double read_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("checkpoint: truncated tensor data");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  json tensors = json::array();
  ckpt.params.visit([&](std::string_view name, const auto& t) {
    tensors.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}});
  });
  json header{{"format", "prdesc-checkpoint"},
              {"format_version", kCheckpointFormatVersion},
              {"float_bits", 64},
              {"byte_order", "little"},
              {"layout", "column-major"},
              {"config", config_to_json(ckpt.config)},
              {"tensors", tensors},
              {"meta", ckpt.meta}};
  out << header.dump() << '\n';
  ckpt.params.visit([&](std::string_view, const auto& t) {
    for (Eigen::Index k = 0; k < t.size(); ++k) write_le(out, t.data()[k]);
  });
  if (!out) throw DataError("checkpoint: write failed");
}

Checkpoint load_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("checkpoint: missing header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format", "") != "prdesc-checkpoint") throw DataError("checkpoint: unknown format");
  if (header.value("format_version", 0) != kCheckpointFormatVersion) {
    throw DataError("checkpoint: unsupported format version");
  }
  if (header.value("float_bits", 0) != 64) throw DataError("checkpoint: only 64-bit tensors are supported");

  Checkpoint ckpt;
  ckpt.config = config_from_json(header.at("config"));
  ckpt.meta = header.value("meta", json::object());
  ckpt.params = ModelParams::zeros(ckpt.config);

  const json& tensors = header.at("tensors");
  std::size_t k = 0;
  ckpt.params.visit([&](std::string_view name, auto& t) {
    if (k >= tensors.size()) throw DataError("checkpoint: missing tensor " + std::string(name));
    const json& desc = tensors[k++];
    if (desc.value("name", "") != name) throw DataError("checkpoint: unexpected tensor order at " + std::string(name));
    const auto shape = desc.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
      throw DataError("checkpoint: shape mismatch for " + std::string(name));
    }
  });
  ckpt.params.visit([&](std::string_view, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = read_le(in);
  });
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  save_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return load_checkpoint(in);
}

}  // namespace prdesc
