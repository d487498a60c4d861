#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace pointseg::nn {

// One named float32 blob inside a checkpoint.
struct NamedBlob {
  std::string name;
  std::vector<int> shape;
  std::vector<float>* data = nullptr;
};

// Versioned binary container: magic, version, a JSON header carrying
// caller metadata plus the tensor manifest, then raw little-endian
// float32 blobs in manifest order. Writes are atomic
// (write-temp-then-rename).
void save_checkpoint(const std::filesystem::path& path,
                     const nlohmann::ordered_json& meta,
                     const std::vector<NamedBlob>& blobs);

// Restores every blob by name, validating shapes, and returns the
// metadata object. Throws FormatError on any structural mismatch.
nlohmann::json load_checkpoint(const std::filesystem::path& path,
                               const std::vector<NamedBlob>& blobs);

}  // namespace pointseg::nn
