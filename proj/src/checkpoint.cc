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

#include "auvsim/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace auvsim {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'A', 'U', 'V', 'P', 'P', 'O', '\0', '\1'};
constexpr size_t kHeaderSize = 48;

template <typename T>
void Put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T Get(const std::string& in, size_t offset) {
  T v;
  std::memcpy(&v, in.data() + offset, sizeof(T));
  return v;
}

std::string ShapeString(const PolicyShape& s) {
  return "obs=" + std::to_string(s.obs_dim) +
         " act=" + std::to_string(s.act_dim) +
         " hidden=" + std::to_string(s.hidden);
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  const PolicyShape& s = ckpt.net.shape();
  const Eigen::VectorXd& p = ckpt.net.parameters();
  std::string out(kMagic, sizeof(kMagic));
  Put<uint32_t>(out, kCheckpointVersion);
  Put<uint32_t>(out, static_cast<uint32_t>(s.obs_dim));
  Put<uint32_t>(out, static_cast<uint32_t>(s.act_dim));
  Put<uint32_t>(out, static_cast<uint32_t>(s.hidden));
  Put<uint64_t>(out, ckpt.seed);
  Put<uint64_t>(out, ckpt.config_hash);
  Put<uint64_t>(out, static_cast<uint64_t>(p.size()));
  out.append(reinterpret_cast<const char*>(p.data()),
             sizeof(double) * static_cast<size_t>(p.size()));
  return out;
}

Checkpoint DeserializeCheckpoint(const std::string& bytes,
                                 const std::string& source) {
  if (bytes.size() < kHeaderSize ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(source + ": not an auvsim checkpoint");
  }
  const uint32_t version = Get<uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) {
    throw CheckpointError(source + ": unsupported checkpoint version " +
                          std::to_string(version));
  }
  PolicyShape shape;
  shape.obs_dim = static_cast<int>(Get<uint32_t>(bytes, 12));
  shape.act_dim = static_cast<int>(Get<uint32_t>(bytes, 16));
  shape.hidden = static_cast<int>(Get<uint32_t>(bytes, 20));
  if (shape.obs_dim <= 0 || shape.act_dim <= 0 || shape.hidden <= 0 ||
      shape.obs_dim > 1 << 16 || shape.act_dim > 1 << 16 ||
      shape.hidden > 1 << 16) {
    throw CheckpointError(source + ": implausible network shape " +
                          ShapeString(shape));
  }
  Checkpoint ckpt{PolicyNet(shape), Get<uint64_t>(bytes, 24),
                  Get<uint64_t>(bytes, 32)};
  const uint64_t count = Get<uint64_t>(bytes, 40);
  if (count != static_cast<uint64_t>(ckpt.net.num_parameters())) {
    throw CheckpointError(source + ": parameter count " +
                          std::to_string(count) + " does not match shape " +
                          ShapeString(shape) + " (expected " +
                          std::to_string(ckpt.net.num_parameters()) + ")");
  }
  if (bytes.size() != kHeaderSize + count * sizeof(double)) {
    throw CheckpointError(source + ": truncated or oversized checkpoint (" +
                          std::to_string(bytes.size()) + " bytes)");
  }
  std::memcpy(ckpt.net.parameters().data(), bytes.data() + kHeaderSize,
              count * sizeof(double));
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& ckpt,
                    const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    const std::string bytes = SerializeCheckpoint(ckpt);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(path.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return DeserializeCheckpoint(ss.str(), path.string());
}

void RequireShape(const Checkpoint& ckpt, const PolicyShape& expected,
                  const std::string& source) {
  const PolicyShape& got = ckpt.net.shape();
  if (got.obs_dim != expected.obs_dim || got.act_dim != expected.act_dim) {
    throw CheckpointError(source + ": interface mismatch, checkpoint has " +
                          ShapeString(got) + " but the environment needs obs=" +
                          std::to_string(expected.obs_dim) +
                          " act=" + std::to_string(expected.act_dim));
  }
}

}  // namespace auvsim
