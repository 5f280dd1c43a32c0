#include "actseq/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "actseq/common.hpp"

namespace actseq {

using nlohmann::json;

namespace {

constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    std::uint32_t n = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) n |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < bytes.size()) n |= bytes[i + 2];
    out.push_back(kB64[(n >> 18) & 63]);
    out.push_back(kB64[(n >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kB64[(n >> 6) & 63] : '=');
    out.push_back(i + 2 < bytes.size() ? kB64[n & 63] : '=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& s) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    if (c == '=') return -1;
    return -2;
  };
  if (s.size() % 4 != 0) throw DataError("checkpoint: bad base64 length");
  std::vector<std::uint8_t> out;
  out.reserve(s.size() / 4 * 3);
  for (std::size_t i = 0; i < s.size(); i += 4) {
    int v[4];
    for (int k = 0; k < 4; ++k) {
      v[k] = val(s[i + k]);
      if (v[k] == -2) throw DataError("checkpoint: bad base64 character");
    }
    const std::uint32_t n = (static_cast<std::uint32_t>(v[0]) << 18) |
                            (static_cast<std::uint32_t>(v[1]) << 12) |
                            (static_cast<std::uint32_t>(std::max(v[2], 0)) << 6) |
                            static_cast<std::uint32_t>(std::max(v[3], 0));
    out.push_back(static_cast<std::uint8_t>((n >> 16) & 0xff));
    if (v[2] >= 0) out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xff));
    if (v[3] >= 0) out.push_back(static_cast<std::uint8_t>(n & 0xff));
  }
  return out;
}

std::vector<std::uint8_t> doubles_to_bytes(const Vector& v) {
  std::vector<std::uint8_t> bytes(v.size() * sizeof(double));
  std::memcpy(bytes.data(), v.data(), bytes.size());
  return bytes;
}

Vector bytes_to_doubles(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % sizeof(double) != 0) throw DataError("checkpoint: bad block size");
  Vector v(bytes.size() / sizeof(double));
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

std::uint64_t fnv1a(std::uint64_t h, const std::vector<std::uint8_t>& bytes) {
  for (const std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

json config_to_json(const TrainingConfig& c) {
  return json{{"iterations", c.iterations},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon},
              {"dropout", c.dropout},
              {"seed", c.seed},
              {"predict_length", c.predict_length},
              {"window", c.window},
              {"hidden_dim", c.hidden_dim},
              {"embed_dim", c.embed_dim},
              {"holdout", c.holdout}};
}

TrainingConfig config_from_json(const json& j) {
  TrainingConfig c;
  c.iterations = j.at("iterations").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.predict_length = j.at("predict_length").get<int>();
  c.window = j.at("window").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.holdout = j.at("holdout").get<double>();
  return c;
}

void write_common(json& j, const ModelParameters& params) {
  std::uint64_t checksum = 0xcbf29ce484222325ull;
  j["blocks"] = json::array();
  for (const auto& b : params.blocks) {
    const auto bytes = doubles_to_bytes(b.value.data);
    checksum = fnv1a(checksum, bytes);
    j["blocks"].push_back({{"name", b.name},
                           {"rows", b.value.rows},
                           {"cols", b.value.cols},
                           {"data", base64_encode(bytes)}});
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(checksum));
  j["checksum"] = hex;
}

void atomic_write(const json& j, const std::filesystem::path& file) {
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot write " + tmp);
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, file);
}

ModelParameters read_blocks(const json& j) {
  ModelParameters params;
  std::uint64_t checksum = 0xcbf29ce484222325ull;
  for (const auto& b : j.at("blocks")) {
    const auto bytes = base64_decode(b.at("data").get<std::string>());
    checksum = fnv1a(checksum, bytes);
    Matrix& m = params.add(b.at("name").get<std::string>(),
                           b.at("rows").get<std::size_t>(),
                           b.at("cols").get<std::size_t>());
    m.data = bytes_to_doubles(bytes);
    if (m.data.size() != m.rows * m.cols) {
      throw DataError("checkpoint: block '" + b.at("name").get<std::string>() +
                      "' size mismatch");
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(checksum));
  if (j.at("checksum").get<std::string>() != hex) {
    throw DataError("checkpoint: checksum mismatch (corrupt file)");
  }
  return params;
}

}  // namespace

void save_checkpoint(const RecognitionModel& model, const std::filesystem::path& file) {
  json j;
  j["version"] = 1;
  j["kind"] = "recognition";
  j["feature_dim"] = model.feature_dim;
  j["embed_dim"] = model.embed_dim;
  j["hidden_dim"] = model.hidden_dim;
  j["dropout"] = model.dropout_rate;
  j["vocabulary"] = model.intentions.symbols();
  j["seed"] = model.config.seed;
  j["config"] = config_to_json(model.config);
  write_common(j, model.params);
  atomic_write(j, file);
}

void save_checkpoint(const PredictionModel& model, const std::filesystem::path& file) {
  json j;
  j["version"] = 1;
  j["kind"] = "prediction";
  j["feature_dim"] = model.feature_dim;
  j["embed_dim"] = model.embed_dim;
  j["hidden_dim"] = model.hidden_dim;
  j["dropout"] = model.dropout_rate;
  j["vocabulary"] = model.vocab.symbols();
  j["seed"] = model.config.seed;
  j["config"] = config_to_json(model.config);
  write_common(j, model.params);
  atomic_write(j, file);
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("checkpoint: corrupt file " + file.string() + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1) {
      throw DataError("checkpoint: version mismatch in " + file.string());
    }
    const std::string kind = j.at("kind").get<std::string>();
    ModelParameters params = read_blocks(j);
    if (kind == "recognition") {
      RecognitionModel m;
      m.feature_dim = j.at("feature_dim").get<int>();
      m.embed_dim = j.at("embed_dim").get<int>();
      m.hidden_dim = j.at("hidden_dim").get<int>();
      m.dropout_rate = j.at("dropout").get<double>();
      m.intentions = ActionVocabulary(j.at("vocabulary").get<std::vector<std::string>>());
      m.config = config_from_json(j.at("config"));
      m.params = std::move(params);
      return m;
    }
    if (kind == "prediction") {
      PredictionModel m;
      m.feature_dim = j.at("feature_dim").get<int>();
      m.embed_dim = j.at("embed_dim").get<int>();
      m.hidden_dim = j.at("hidden_dim").get<int>();
      m.dropout_rate = j.at("dropout").get<double>();
      m.vocab = ActionVocabulary(j.at("vocabulary").get<std::vector<std::string>>());
      m.config = config_from_json(j.at("config"));
      m.params = std::move(params);
      return m;
    }
    throw DataError("checkpoint: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DataError("checkpoint: schema error in " + file.string() + ": " + e.what());
  }
}

}  // namespace actseq
