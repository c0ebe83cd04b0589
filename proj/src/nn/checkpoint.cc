/*
 * Copyright 2026 The TAN Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tan/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

namespace tanet {
namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <typename T>
void PutLittle(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<uint64_t>(value) >> (8 * i)) &
                                    0xff));
  }
}

void PutFloat(std::string& out, float value) {
  PutLittle(out, std::bit_cast<uint32_t>(value));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T Little(const char* what) {
    Need(sizeof(T), what);
    uint64_t value = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<uint64_t>(
                   static_cast<unsigned char>(bytes_[pos_ + i]))
               << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(value);
  }

  std::string Bytes(size_t n, const char* what) {
    Need(n, what);
    std::string out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }
  size_t offset() const { return pos_; }

 private:
  void Need(size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(
          CheckpointError::Kind::kTruncated,
          "truncated tensor file: needed " + std::to_string(n) +
              " bytes for " + what + " at offset " + std::to_string(pos_) +
              ", only " + std::to_string(bytes_.size() - pos_) + " left");
    }
  }

  const std::string& bytes_;
  size_t pos_ = 0;
};

std::string JoinNames(const std::vector<std::string>& names) {
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ", ";
    out += names[i];
  }
  return out;
}

}  // namespace

int64_t EncodedEntrySize(const std::string& name, const Shape& shape) {
  return 2 + static_cast<int64_t>(name.size()) + 1 +
         4 * static_cast<int64_t>(shape.size()) + 4 * NumElements(shape);
}

std::string EncodeTensorRecords(const TensorRecords& records) {
  std::string out(kTensorFileMagic, sizeof(kTensorFileMagic));
  PutLittle<uint32_t>(out, kTensorFileVersion);
  PutLittle<uint32_t>(out, static_cast<uint32_t>(records.size()));
  std::set<std::string> seen;
  for (const TensorRecord& record : records) {
    if (record.name.size() > 0xffff) {
      throw CheckpointError(CheckpointError::Kind::kMalformed,
                            "tensor name longer than 65535 bytes");
    }
    if (!seen.insert(record.name).second) {
      throw CheckpointError(CheckpointError::Kind::kDuplicateName,
                            "duplicate tensor name '" + record.name + "'");
    }
    const Shape& shape = record.tensor.shape();
    if (shape.size() > 0xff) {
      throw CheckpointError(CheckpointError::Kind::kMalformed,
                            "tensor '" + record.name + "' has too many dims");
    }
    PutLittle<uint16_t>(out, static_cast<uint16_t>(record.name.size()));
    out += record.name;
    PutLittle<uint8_t>(out, static_cast<uint8_t>(shape.size()));
    for (int64_t extent : shape) {
      PutLittle<uint32_t>(out, static_cast<uint32_t>(extent));
    }
    for (float v : record.tensor.data()) PutFloat(out, v);
  }
  return out;
}

TensorRecords DecodeTensorRecords(const std::string& bytes) {
  Reader reader(bytes);
  const std::string magic = reader.Bytes(sizeof(kTensorFileMagic), "magic");
  if (std::memcmp(magic.data(), kTensorFileMagic, sizeof(kTensorFileMagic)) !=
      0) {
    throw CheckpointError(CheckpointError::Kind::kBadMagic,
                          "not a tensor file: bad magic bytes");
  }
  const uint32_t version = reader.Little<uint32_t>("version");
  if (version != kTensorFileVersion) {
    throw CheckpointError(CheckpointError::Kind::kBadVersion,
                          "unsupported tensor file version " +
                              std::to_string(version));
  }
  const uint32_t count = reader.Little<uint32_t>("entry count");
  TensorRecords records;
  std::set<std::string> seen;
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = reader.Little<uint16_t>("name length");
    std::string name = reader.Bytes(name_len, "name");
    if (!seen.insert(name).second) {
      throw CheckpointError(CheckpointError::Kind::kDuplicateName,
                            "duplicate tensor name '" + name + "'");
    }
    const uint8_t ndim = reader.Little<uint8_t>("rank");
    if (ndim == 0) {
      throw CheckpointError(CheckpointError::Kind::kMalformed,
                            "tensor '" + name + "' has rank 0");
    }
    Shape shape;
    uint64_t total = 1;
    for (uint8_t d = 0; d < ndim; ++d) {
      const uint32_t extent = reader.Little<uint32_t>("dimension");
      if (extent == 0) {
        throw CheckpointError(CheckpointError::Kind::kMalformed,
                              "tensor '" + name + "' has a zero extent");
      }
      total *= extent;
      if (total > (bytes.size() - reader.offset()) / 4 + 1) {
        throw CheckpointError(CheckpointError::Kind::kTruncated,
                              "tensor '" + name + "' extends past end of file");
      }
      shape.push_back(extent);
    }
    std::vector<float> values(total);
    for (float& v : values) {
      v = std::bit_cast<float>(reader.Little<uint32_t>("tensor values"));
    }
    records.push_back(
        {std::move(name), Tensor<float>::FromData(shape, std::move(values))});
  }
  if (!reader.done()) {
    throw CheckpointError(CheckpointError::Kind::kMalformed,
                          "trailing bytes after last tensor entry");
  }
  return records;
}

void WriteTensorFile(const std::filesystem::path& path,
                     const TensorRecords& records) {
  const std::string bytes = EncodeTensorRecords(records);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw CheckpointError(CheckpointError::Kind::kIo,
                            "cannot open " + tmp.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw CheckpointError(CheckpointError::Kind::kIo,
                            "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw CheckpointError(CheckpointError::Kind::kIo,
                          "cannot move " + tmp.string() + " to " +
                              path.string() + ": " + ec.message());
  }
}

TensorRecords ReadTensorFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointError::Kind::kIo,
                          "cannot open " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  try {
    return DecodeTensorRecords(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(e.kind(), path.string() + ": " + e.what());
  }
}

TensorRecords ModelRecords(const Model<float>& model) {
  TensorRecords records;
  for (const auto& [name, tensor] : model.parameters()) {
    records.push_back({name, tensor});
  }
  return records;
}

void SaveCheckpoint(const Model<float>& model,
                    const std::filesystem::path& path) {
  WriteTensorFile(path, ModelRecords(model));
}

void LoadCheckpointRecords(Model<float>& model, const TensorRecords& records) {
  std::map<std::string, const TensorRecord*> by_name;
  for (const TensorRecord& r : records) by_name[r.name] = &r;

  std::vector<std::string> missing;
  std::vector<std::string> conflicts;
  std::set<std::string> known;
  for (const auto& [name, tensor] : model.parameters()) {
    known.insert(name);
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      missing.push_back(name);
    } else if (it->second->tensor.shape() != tensor.shape()) {
      conflicts.push_back(name + " (checkpoint " +
                          ShapeToString(it->second->tensor.shape()) +
                          ", model " + ShapeToString(tensor.shape()) + ")");
    }
  }
  std::vector<std::string> unknown;
  for (const TensorRecord& r : records) {
    if (!known.count(r.name)) unknown.push_back(r.name);
  }
  if (!missing.empty()) {
    throw CheckpointError(CheckpointError::Kind::kMissingName,
                          "checkpoint is missing parameters: " +
                              JoinNames(missing));
  }
  if (!unknown.empty()) {
    throw CheckpointError(CheckpointError::Kind::kUnknownName,
                          "checkpoint has unknown parameters: " +
                              JoinNames(unknown));
  }
  if (!conflicts.empty()) {
    throw CheckpointError(CheckpointError::Kind::kShapeConflict,
                          "checkpoint shape conflicts: " +
                              JoinNames(conflicts));
  }
  for (const auto& [name, tensor] : model.parameters()) {
    Tensor<float> target = tensor;
    auto src = by_name.at(name)->tensor.data();
    std::copy(src.begin(), src.end(), target.mutable_data().begin());
  }
}

void LoadCheckpoint(Model<float>& model, const std::filesystem::path& path) {
  LoadCheckpointRecords(model, ReadTensorFile(path));
}

SpatialLoadReport LoadSpatialFrom2d(Model<float>& model,
                                    const TensorRecords& records) {
  std::map<std::string, Tensor<float>> params;
  for (const auto& [name, tensor] : model.parameters()) params[name] = tensor;

  std::vector<std::string> unknown;
  std::vector<std::string> conflicts;
  for (const TensorRecord& r : records) {
    if (IsTemporalParameterName(r.name)) continue;
    auto it = params.find(r.name);
    if (it == params.end()) {
      unknown.push_back(r.name);
    } else if (it->second.shape() != r.tensor.shape()) {
      conflicts.push_back(r.name + " (checkpoint " +
                          ShapeToString(r.tensor.shape()) + ", model " +
                          ShapeToString(it->second.shape()) + ")");
    }
  }
  if (!unknown.empty()) {
    throw CheckpointError(CheckpointError::Kind::kUnknownName,
                          "checkpoint has unknown parameters: " +
                              JoinNames(unknown));
  }
  if (!conflicts.empty()) {
    throw CheckpointError(CheckpointError::Kind::kShapeConflict,
                          "checkpoint shape conflicts: " +
                              JoinNames(conflicts));
  }

  std::map<std::string, const TensorRecord*> by_name;
  for (const TensorRecord& r : records) {
    if (!IsTemporalParameterName(r.name)) by_name[r.name] = &r;
  }
  SpatialLoadReport report;
  for (const auto& [name, tensor] : model.parameters()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      report.skipped.push_back(name);
      continue;
    }
    Tensor<float> target = tensor;
    auto src = it->second->tensor.data();
    std::copy(src.begin(), src.end(), target.mutable_data().begin());
    report.loaded.push_back(name);
  }
  return report;
}

}  // namespace tanet
