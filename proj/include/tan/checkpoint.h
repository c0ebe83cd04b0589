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

#ifndef TAN_CHECKPOINT_H_
#define TAN_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tan/model.h"
#include "tan/tensor.h"

// Named-tensor container, little-endian throughout:
//
//   "TANCKPT1" | u32 version (=1) | u32 count |
//   count x { u16 name_len | name (UTF-8) | u8 ndim | ndim x u32 dim |
//             prod(dims) x f32 }
//
// Model checkpoints and generated dataset videos both use this layout.

namespace tanet {

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind {
    kIo,
    kBadMagic,
    kBadVersion,
    kTruncated,
    kMalformed,
    kDuplicateName,
    kMissingName,
    kUnknownName,
    kShapeConflict,
  };

  CheckpointError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct TensorRecord {
  std::string name;
  Tensor<float> tensor;
};

using TensorRecords = std::vector<TensorRecord>;

inline constexpr char kTensorFileMagic[8] = {'T', 'A', 'N', 'C',
                                             'K', 'P', 'T', '1'};
inline constexpr uint32_t kTensorFileVersion = 1;

std::string EncodeTensorRecords(const TensorRecords& records);
// Parses the whole buffer or throws; never returns a partial result.
TensorRecords DecodeTensorRecords(const std::string& bytes);

// Writes via a temporary file and rename.
void WriteTensorFile(const std::filesystem::path& path,
                     const TensorRecords& records);
TensorRecords ReadTensorFile(const std::filesystem::path& path);

// Bytes an entry occupies on disk (header plus payload).
int64_t EncodedEntrySize(const std::string& name, const Shape& shape);

TensorRecords ModelRecords(const Model<float>& model);

void SaveCheckpoint(const Model<float>& model,
                    const std::filesystem::path& path);

// All-or-nothing: names and shapes must match the registry exactly, otherwise
// the model is left untouched and the error lists every offending name.
void LoadCheckpoint(Model<float>& model, const std::filesystem::path& path);
void LoadCheckpointRecords(Model<float>& model, const TensorRecords& records);

struct SpatialLoadReport {
  std::vector<std::string> loaded;   // model parameters overwritten
  std::vector<std::string> skipped;  // model parameters left as they were
};

// Copies spatial (stem, bottleneck, head) parameters present in `records`
// into the model; temporal-module parameters are never touched. Unknown
// names and shape conflicts raise before anything is written.
SpatialLoadReport LoadSpatialFrom2d(Model<float>& model,
                                    const TensorRecords& records);

}  // namespace tanet

#endif  // TAN_CHECKPOINT_H_
