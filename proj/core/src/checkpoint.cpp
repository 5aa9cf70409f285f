#include "swasat/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <torch/torch.h>

#include "swasat/errors.hpp"
#include "swasat/hashing.hpp"

namespace swasat {
namespace {

constexpr char kMagic[8] = {'S', 'W', 'A', 'S', 'A', 'T', 'C', 'K'};

std::string dtype_name(torch::ScalarType type) {
  switch (type) {
    case torch::kFloat32: return "f32";
    case torch::kFloat64: return "f64";
    case torch::kInt64: return "i64";
    case torch::kUInt8: return "u8";
    default: throw IoError(std::string("checkpoint: unsupported dtype ") + c10::toString(type));
  }
}

torch::ScalarType parse_dtype(const std::string& name) {
  if (name == "f32") return torch::kFloat32;
  if (name == "f64") return torch::kFloat64;
  if (name == "i64") return torch::kInt64;
  if (name == "u8") return torch::kUInt8;
  throw IoError("checkpoint: unknown dtype '" + name + "'");
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) {
    throw IoError("checkpoint: truncated file");
  }
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

void collect(const torch::nn::Module& module, const std::string& prefix,
             std::vector<std::pair<std::string, torch::Tensor>>& out) {
  for (const auto& item : module.named_parameters(/*recurse=*/true)) {
    out.emplace_back(prefix + item.key(), item.value());
  }
  for (const auto& item : module.named_buffers(/*recurse=*/true)) {
    out.emplace_back(prefix + item.key(), item.value());
  }
}

}  // namespace

bool Checkpoint::has_prefix(const std::string& prefix) const {
  const auto it = arrays.lower_bound(prefix);
  return it != arrays.end() && it->first.starts_with(prefix);
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  nlohmann::json header;
  header["format_version"] = checkpoint.format_version;
  header["generator"] = checkpoint.generator;
  header["discriminator"] = checkpoint.discriminator;
  header["train"] = checkpoint.train;
  header["step"] = checkpoint.step;
  header["path_length_mean"] = checkpoint.path_length_mean;
  auto entries = nlohmann::json::array();
  std::vector<torch::Tensor> blobs;
  std::int64_t offset = 0;
  for (const auto& [name, tensor] : checkpoint.arrays) {
    auto data = tensor.detach().cpu().contiguous();
    const auto nbytes = static_cast<std::int64_t>(data.nbytes());
    entries.push_back({{"name", name},
                       {"dtype", dtype_name(data.scalar_type())},
                       {"shape", data.sizes().vec()},
                       {"offset", offset},
                       {"nbytes", nbytes}});
    offset += nbytes;
    blobs.push_back(std::move(data));
  }
  header["arrays"] = entries;
  const auto header_text = header.dump();

  std::string out;
  out.reserve(sizeof(kMagic) + 12 + header_text.size() + static_cast<std::size_t>(offset));
  out.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, checkpoint.format_version);
  put<std::uint64_t>(out, header_text.size());
  out.append(header_text);
  for (const auto& blob : blobs) {
    out.append(static_cast<const char*>(blob.data_ptr()), blob.nbytes());
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("checkpoint: bad magic");
  }
  std::size_t pos = sizeof(kMagic);
  Checkpoint ck;
  ck.format_version = get<std::uint32_t>(bytes, pos);
  if (ck.format_version != Checkpoint::kFormatVersion) {
    throw IoError("checkpoint: unsupported format version " + std::to_string(ck.format_version));
  }
  const auto header_len = get<std::uint64_t>(bytes, pos);
  if (pos + header_len > bytes.size()) {
    throw IoError("checkpoint: truncated header");
  }
  const auto header = nlohmann::json::parse(bytes.substr(pos, header_len));
  pos += header_len;
  ck.generator = header.at("generator").get<GeneratorConfig>();
  ck.discriminator = header.at("discriminator").get<DiscriminatorConfig>();
  ck.train = header.at("train");
  ck.step = header.at("step").get<std::int64_t>();
  ck.path_length_mean = header.at("path_length_mean").get<double>();
  const auto data_start = pos;
  for (const auto& entry : header.at("arrays")) {
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto nbytes = entry.at("nbytes").get<std::size_t>();
    if (data_start + offset + nbytes > bytes.size()) {
      throw IoError("checkpoint: array '" + entry.at("name").get<std::string>() + "' runs past end of file");
    }
    const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
    auto tensor = torch::empty(shape, torch::TensorOptions().dtype(parse_dtype(entry.at("dtype").get<std::string>())));
    if (static_cast<std::size_t>(tensor.nbytes()) != nbytes) {
      throw IoError("checkpoint: size mismatch for '" + entry.at("name").get<std::string>() + "'");
    }
    std::memcpy(tensor.data_ptr(), bytes.data() + data_start + offset, nbytes);
    ck.arrays.emplace(entry.at("name").get<std::string>(), std::move(tensor));
  }
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(checkpoint);
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) {
      throw IoError("write failure on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

std::string checkpoint_hash(const Checkpoint& checkpoint) { return sha256_hex(serialize_checkpoint(checkpoint)); }

void export_module(const torch::nn::Module& module, const std::string& prefix,
                   std::map<std::string, torch::Tensor>& arrays) {
  std::vector<std::pair<std::string, torch::Tensor>> items;
  collect(module, prefix, items);
  for (auto& [name, tensor] : items) {
    arrays[name] = tensor.detach().cpu().clone();
  }
}

void import_module(torch::nn::Module& module, const std::string& prefix,
                   const std::map<std::string, torch::Tensor>& arrays) {
  std::vector<std::pair<std::string, torch::Tensor>> items;
  collect(module, prefix, items);
  torch::NoGradGuard no_grad;
  for (auto& [name, tensor] : items) {
    const auto it = arrays.find(name);
    if (it == arrays.end()) {
      throw IoError("checkpoint: missing array '" + name + "'");
    }
    if (it->second.sizes() != tensor.sizes()) {
      std::ostringstream msg;
      msg << "checkpoint: shape mismatch for '" << name << "': stored " << it->second.sizes() << ", model "
          << tensor.sizes();
      throw IoError(msg.str());
    }
    tensor.copy_(it->second);
  }
}

Generator load_generator(const Checkpoint& checkpoint, bool use_ema) {
  Generator generator(checkpoint.generator);
  const std::string prefix = use_ema && checkpoint.has_prefix("g_ema.") ? "g_ema." : "g.";
  import_module(*generator, prefix, checkpoint.arrays);
  const auto it = checkpoint.arrays.find("w_mean");
  if (it != checkpoint.arrays.end()) {
    torch::NoGradGuard no_grad;
    generator->w_mean.copy_(it->second);
  }
  generator->eval();
  return generator;
}

Discriminator load_discriminator(const Checkpoint& checkpoint) {
  Discriminator discriminator(checkpoint.discriminator);
  import_module(*discriminator, "d.", checkpoint.arrays);
  discriminator->eval();
  return discriminator;
}

}  // namespace swasat
