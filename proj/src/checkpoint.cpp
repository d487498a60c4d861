#include "pointseg/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "pointseg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian");

namespace pointseg::nn {
namespace {

constexpr char kMagic[8] = {'P', 'S', 'E', 'G', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const nlohmann::ordered_json& meta,
                     const std::vector<NamedBlob>& blobs) {
  nlohmann::ordered_json header;
  header["meta"] = meta;
  header["tensors"] = nlohmann::ordered_json::array();
  for (const NamedBlob& blob : blobs) {
    if (blob.data->size() != element_count(blob.shape))
      throw ContractError("checkpoint: blob '" + blob.name +
                          "' size does not match its shape");
    nlohmann::ordered_json t;
    t["name"] = blob.name;
    t["shape"] = blob.shape;
    header["tensors"].push_back(std::move(t));
  }
  const std::string header_str = header.dump();

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(kMagic, sizeof(kMagic));
    const uint32_t version = kVersion;
    const auto header_len = static_cast<uint32_t>(header_str.size());
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_str.data(),
              static_cast<std::streamsize>(header_str.size()));
    for (const NamedBlob& blob : blobs)
      out.write(reinterpret_cast<const char*>(blob.data->data()),
                static_cast<std::streamsize>(blob.data->size() *
                                             sizeof(float)));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json load_checkpoint(const std::filesystem::path& path,
                               const std::vector<NamedBlob>& blobs) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  char magic[8];
  uint32_t version = 0, header_len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError("checkpoint: " + path.string() + ": bad magic");
  if (version != kVersion)
    throw FormatError("checkpoint: " + path.string() +
                      ": unsupported version " + std::to_string(version));

  std::string header_str(header_len, '\0');
  in.read(header_str.data(), header_len);
  if (!in) throw FormatError("checkpoint: " + path.string() +
                             ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint: " + path.string() + ": " + e.what());
  }

  const auto& tensors = header.at("tensors");
  if (tensors.size() != blobs.size())
    throw FormatError("checkpoint: " + path.string() + ": expected " +
                      std::to_string(blobs.size()) + " tensors, file has " +
                      std::to_string(tensors.size()));
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    const std::string name = tensors[i].at("name").get<std::string>();
    const auto shape = tensors[i].at("shape").get<std::vector<int>>();
    if (name != blobs[i].name)
      throw FormatError("checkpoint: tensor " + std::to_string(i) + " is '" +
                        name + "', expected '" + blobs[i].name + "'");
    if (shape != blobs[i].shape)
      throw FormatError("checkpoint: tensor '" + name + "' shape mismatch");
    blobs[i].data->resize(element_count(shape));
    in.read(reinterpret_cast<char*>(blobs[i].data->data()),
            static_cast<std::streamsize>(blobs[i].data->size() *
                                         sizeof(float)));
    if (!in)
      throw FormatError("checkpoint: " + path.string() +
                        ": truncated blob '" + name + "'");
  }
  return header.at("meta");
}

}  // namespace pointseg::nn
