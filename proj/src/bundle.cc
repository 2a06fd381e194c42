#include "llmguard/bundle.h"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "llmguard/errors.h"

namespace llmguard {

namespace {

constexpr std::string_view kMagic = "LLMG";
constexpr std::size_t kChecksumSize = 8;

void put_u32(std::string& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double value) { put_u64(out, std::bit_cast<std::uint64_t>(value)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

  std::string_view take(std::size_t count, const char* what) {
    if (remaining() < count) {
      throw ParseError(offset_, std::string("truncated ") + what);
    }
    std::string_view out = bytes_.substr(offset_, count);
    offset_ += count;
    return out;
  }

  std::uint64_t uint(std::size_t width, const char* what) {
    std::string_view raw = take(width, what);
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < width; ++i) {
      value |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
    }
    return value;
  }

  double f64(const char* what) { return std::bit_cast<double>(uint(8, what)); }

 private:
  std::string_view bytes_;
  std::size_t offset_ = 0;
};

}  // namespace

void ModelBundle::validate() const {
  if (model.layers().empty()) throw ShapeError("bundle has no model");
  if (head_names.size() != model.output_dim()) {
    throw ShapeError("bundle has " + std::to_string(head_names.size()) +
                     " head names for a model with " + std::to_string(model.output_dim()) +
                     " outputs");
  }
  if (vocabulary.size() != model.input_dim()) {
    throw ShapeError("bundle vocabulary has " + std::to_string(vocabulary.size()) +
                     " tokens for a model with input dimension " +
                     std::to_string(model.input_dim()));
  }
}

std::vector<double> ModelBundle::head_scores(std::string_view text) const {
  return forward(model, vectorize(text, vocabulary));
}

double ModelBundle::score(std::string_view text) const {
  auto scores = head_scores(text);
  return *std::max_element(scores.begin(), scores.end());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string serialize_bundle(const ModelBundle& bundle) {
  bundle.validate();
  nlohmann::json header = {
      {"heads", bundle.head_names},
      {"input_dim", bundle.model.input_dim()},
      {"hidden_dims", bundle.model.hidden_dims()},
      {"output_dim", bundle.model.output_dim()},
      {"vocabulary", bundle.vocabulary.tokens()},
      {"training",
       {{"seed", bundle.training.seed},
        {"epochs", bundle.training.epochs},
        {"final_loss", bundle.training.final_loss}}},
  };
  const std::string header_text = header.dump();

  std::string out(kMagic);
  put_u32(out, kBundleFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  for (const auto& layer : bundle.model.layers()) {
    for (double w : layer.weights) put_f64(out, w);
    for (double b : layer.bias) put_f64(out, b);
  }
  put_u64(out, fnv1a64(out));
  return out;
}

ModelBundle parse_bundle(std::string_view bytes) {
  Reader reader(bytes);
  if (reader.take(4, "magic") != kMagic) throw ParseError(0, "bad magic bytes");
  const auto version = static_cast<std::uint32_t>(reader.uint(4, "format version"));
  if (version != kBundleFormatVersion) throw UnsupportedVersionError(version);
  const auto header_length = static_cast<std::size_t>(reader.uint(4, "header length"));
  const std::size_t header_offset = reader.offset();
  std::string_view header_text = reader.take(header_length, "header");

  ModelBundle bundle;
  std::vector<std::size_t> hidden_dims;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  try {
    const auto header = nlohmann::json::parse(header_text);
    bundle.head_names = header.at("heads").get<std::vector<std::string>>();
    input_dim = header.at("input_dim").get<std::size_t>();
    hidden_dims = header.at("hidden_dims").get<std::vector<std::size_t>>();
    output_dim = header.at("output_dim").get<std::size_t>();
    bundle.vocabulary = Vocabulary(header.at("vocabulary").get<std::vector<std::string>>());
    const auto& training = header.at("training");
    bundle.training.seed = training.at("seed").get<std::uint64_t>();
    bundle.training.epochs = training.at("epochs").get<int>();
    bundle.training.final_loss = training.at("final_loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(header_offset, std::string("bad header: ") + e.what());
  } catch (const UsageError& e) {
    throw ParseError(header_offset, std::string("bad header: ") + e.what());
  }

  if (input_dim == 0 || output_dim == 0 ||
      std::any_of(hidden_dims.begin(), hidden_dims.end(), [](std::size_t d) { return d == 0; })) {
    throw ParseError(header_offset, "bad header: layer dimensions must be positive");
  }
  // Sized from the header before allocating so a corrupt header cannot
  // request an arbitrarily large model.
  std::size_t parameter_bytes = 0;
  {
    std::size_t in = input_dim;
    auto add_layer = [&](std::size_t out) {
      if (in > bytes.size() || out > bytes.size()) {
        throw ParseError(bytes.size(), "truncated parameter block");
      }
      parameter_bytes += 8 * (in * out + out);
      in = out;
    };
    for (std::size_t width : hidden_dims) add_layer(width);
    add_layer(output_dim);
  }
  const std::size_t needed = parameter_bytes + kChecksumSize;
  if (reader.remaining() < needed) throw ParseError(bytes.size(), "truncated parameter block");
  if (reader.remaining() > needed) {
    throw ParseError(reader.offset() + needed, "trailing bytes after checksum");
  }

  MlpModel shape(input_dim, hidden_dims, output_dim);
  std::vector<DenseLayer> layers = shape.layers();
  for (auto& layer : layers) {
    for (double& w : layer.weights) w = reader.f64("weights");
    for (double& b : layer.bias) b = reader.f64("biases");
  }
  const std::size_t checksum_offset = reader.offset();
  const std::uint64_t stored = reader.uint(8, "checksum");
  if (stored != fnv1a64(bytes.substr(0, checksum_offset))) {
    throw ParseError(checksum_offset, "checksum mismatch");
  }
  bundle.model = MlpModel(std::move(layers));
  try {
    bundle.validate();
  } catch (const ShapeError& e) {
    throw ParseError(header_offset, e.what());
  }
  return bundle;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& destination) {
  const std::string bytes = serialize_bundle(bundle);
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write bundle to " + destination.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing bundle to " + destination.string());
}

ModelBundle load_bundle(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw Error("cannot open bundle " + source.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_bundle(buffer.str());
}

}  // namespace llmguard
