#include "edgemlp/model_store.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "byte_io.hpp"
#include "edgemlp/error.hpp"
#include "edgemlp/idx.hpp"

namespace edgemlp {

namespace {

std::string format_float(float v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_float(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, std::string_view text) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::ShapeMismatch, "header field " + key + " has malformed value '" + std::string(text) + "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, std::string_view text) {
  std::vector<T> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    out.push_back(parse_number<T>(key, text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string build_header(const MlpConfig& c, const ModelMetadata& m) {
  std::string h;
  h += "input_dim=" + std::to_string(c.input_dim) + "\n";
  h += "hidden_dims=" + join(c.hidden_dims) + "\n";
  h += "dropout_rates=" + join(c.dropout_rates) + "\n";
  h += "output_dim=" + std::to_string(c.output_dim) + "\n";
  h += "bn_epsilon=" + format_float(c.bn_epsilon) + "\n";
  h += "bn_momentum=" + format_float(c.bn_momentum) + "\n";
  h += "dataset=" + m.dataset + "\n";
  h += "seed=" + std::to_string(m.seed) + "\n";
  h += "epochs=" + std::to_string(m.epochs) + "\n";
  return h;
}

void parse_header(std::string_view text, MlpConfig& c, ModelMetadata& m) {
  std::map<std::string, std::string, std::less<>> fields;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::ShapeMismatch, "malformed header line '" + std::string(line) + "'");
    fields.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
    start = end + 1;
  }
  const auto get = [&](const std::string& key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) fail(ErrorCode::ShapeMismatch, "header lacks field " + key);
    return it->second;
  };
  c.input_dim = parse_number<std::size_t>("input_dim", get("input_dim"));
  c.hidden_dims = parse_list<std::size_t>("hidden_dims", get("hidden_dims"));
  c.dropout_rates = parse_list<float>("dropout_rates", get("dropout_rates"));
  c.output_dim = parse_number<std::size_t>("output_dim", get("output_dim"));
  c.bn_epsilon = parse_number<float>("bn_epsilon", get("bn_epsilon"));
  c.bn_momentum = parse_number<float>("bn_momentum", get("bn_momentum"));
  m.dataset = get("dataset");
  m.seed = parse_number<std::uint64_t>("seed", get("seed"));
  m.epochs = parse_number<int>("epochs", get("epochs"));
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> encode_model(const Model& model, const ModelMetadata& metadata) {
  model.check_shapes();
  const auto tensors = model.stored_tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    for (const float v : tensors[t]) {
      if (!std::isfinite(v)) fail(ErrorCode::NonFiniteInput, "tensor " + std::to_string(t) + " holds a non-finite value");
    }
  }
  const std::string header = build_header(model.config, metadata);

  detail::ByteWriter w;
  w.bytes(kModelMagic, sizeof(kModelMagic));
  w.u16(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.bytes(header.data(), header.size());
  const std::size_t payload_start = w.size();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.u32(static_cast<std::uint32_t>(t.size()));
    w.f32s(t);
  }
  auto& buf = w.buffer();
  const std::uint64_t sum = fnv1a64(std::span<const std::uint8_t>(buf).subspan(payload_start));
  w.u64(sum);
  return std::move(w.buffer());
}

StoredModel decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kModelMagic) || std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    fail(ErrorCode::BadMagic, "not an SGMLP1 model file");
  }
  detail::ByteReader r(bytes, ErrorCode::ShapeMismatch);
  r.take(sizeof(kModelMagic));
  const std::uint16_t version = r.u16();
  if (version != kModelFormatVersion) {
    fail(ErrorCode::VersionUnsupported, "model format version " + std::to_string(version));
  }
  const std::uint32_t header_len = r.u32();
  const auto header_bytes = r.take(header_len);
  if (r.remaining() < 8 + 4) fail(ErrorCode::ShapeMismatch, "model file ends before its payload");

  const std::size_t payload_start = r.position();
  const std::size_t payload_len = bytes.size() - payload_start - 8;
  const auto payload = bytes.subspan(payload_start, payload_len);
  detail::ByteReader tail(bytes.subspan(payload_start + payload_len), ErrorCode::ShapeMismatch);
  if (tail.u64() != fnv1a64(payload)) fail(ErrorCode::ChecksumMismatch, "model payload checksum does not verify");

  StoredModel stored;
  MlpConfig config;
  parse_header(std::string_view(reinterpret_cast<const char*>(header_bytes.data()), header_bytes.size()), config,
               stored.metadata);
  try {
    validate(config);
  } catch (const Error& e) {
    fail(ErrorCode::ShapeMismatch, std::string("header describes an invalid network: ") + e.message());
  }
  stored.model = make_model<float>(config);

  detail::ByteReader p(payload, ErrorCode::ShapeMismatch);
  auto tensors = stored.model.stored_tensors();
  const std::uint32_t count = p.u32();
  if (count != tensors.size()) {
    fail(ErrorCode::ShapeMismatch, "payload holds " + std::to_string(count) + " tensors, header implies " +
                                       std::to_string(tensors.size()));
  }
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const std::uint32_t n = p.u32();
    if (n != tensors[t].size()) {
      fail(ErrorCode::ShapeMismatch, "tensor " + std::to_string(t) + " has " + std::to_string(n) +
                                         " values, header implies " + std::to_string(tensors[t].size()));
    }
    p.f32s(tensors[t]);
  }
  if (p.remaining() != 0) fail(ErrorCode::ShapeMismatch, "payload longer than the header implies");
  return stored;
}

void save_model(const std::filesystem::path& path, const Model& model, const ModelMetadata& metadata) {
  detail::write_file_atomic(path, encode_model(model, metadata));
}

StoredModel load_model(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_model(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

}  // namespace edgemlp
