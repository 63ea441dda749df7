// Copyright 2026 The auvsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary policy checkpoints. All integers and doubles are little-endian:
//
//   offset  size  field
//        0     8  magic "AUVPPO\0\1"
//        8     4  u32 format version (1)
//       12     4  u32 observation size
//       16     4  u32 action size
//       20     4  u32 hidden width
//       24     8  u64 training seed
//       32     8  u64 config hash
//       40     8  u64 parameter count P
//       48    8P  f64 parameters in PolicyNet order

#ifndef AUVSIM_CHECKPOINT_H_
#define AUVSIM_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "auvsim/policy.h"

namespace auvsim {

inline constexpr uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what)
      : std::runtime_error(what) {}
};

struct Checkpoint {
  PolicyNet net;
  uint64_t seed = 0;
  uint64_t config_hash = 0;
};

std::string SerializeCheckpoint(const Checkpoint& ckpt);
// Throws CheckpointError on a corrupt or truncated blob.
Checkpoint DeserializeCheckpoint(const std::string& bytes,
                                 const std::string& source = "<checkpoint>");

// Writes to a temporary sibling and renames it into place.
void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Throws CheckpointError naming both shapes when `ckpt` does not match.
void RequireShape(const Checkpoint& ckpt, const PolicyShape& expected,
                  const std::string& source);

}  // namespace auvsim

#endif  // AUVSIM_CHECKPOINT_H_
