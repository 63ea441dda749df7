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

#include <cstring>
#include <filesystem>

#include "doctest.h"

namespace auvsim {
namespace {

template <typename T>
T At(const std::string& bytes, size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

TEST_SUITE("checkpoint") {

TEST_CASE("byte layout") {
  const PolicyNet net = PolicyNet::Initialize({17, 6, 4}, 3, -0.5);
  const std::string bytes =
      SerializeCheckpoint({net, 0x0102030405060708ull, 0xabcdefull});
  CHECK(bytes.size() == 48 + 8 * static_cast<size_t>(net.num_parameters()));
  CHECK(std::memcmp(bytes.data(), "AUVPPO\0\1", 8) == 0);
  CHECK(At<uint32_t>(bytes, 8) == 1);
  CHECK(At<uint32_t>(bytes, 12) == 17);
  CHECK(At<uint32_t>(bytes, 16) == 6);
  CHECK(At<uint32_t>(bytes, 20) == 4);
  CHECK(At<uint64_t>(bytes, 24) == 0x0102030405060708ull);
  CHECK(static_cast<unsigned char>(bytes[24]) == 0x08);  // little-endian
  CHECK(At<uint64_t>(bytes, 32) == 0xabcdefull);
  CHECK(At<uint64_t>(bytes, 40) ==
        static_cast<uint64_t>(net.num_parameters()));
  for (int i = 0; i < net.num_parameters(); ++i) {
    CHECK(At<double>(bytes, 48 + 8 * i) == net.parameters()[i]);
  }
}

TEST_CASE("round trip is bitwise") {
  const PolicyNet net = PolicyNet::Initialize({17, 6, 32}, 9, 0.1);
  const auto dir = std::filesystem::temp_directory_path() / "auvsim_ckpt_test";
  std::filesystem::create_directories(dir);
  SaveCheckpoint({net, 5, 6}, dir / "c.bin");
  const Checkpoint back = LoadCheckpoint(dir / "c.bin");
  CHECK(back.net == net);
  CHECK(back.seed == 5);
  CHECK(back.config_hash == 6);
  CHECK(!std::filesystem::exists(dir / "c.bin.tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt blobs are rejected") {
  const PolicyNet net = PolicyNet::Initialize({17, 6, 4}, 3, 0.0);
  const std::string good = SerializeCheckpoint({net, 1, 2});
  CHECK_THROWS_AS(DeserializeCheckpoint(good.substr(0, 47)), CheckpointError);
  CHECK_THROWS_AS(DeserializeCheckpoint(good.substr(0, good.size() - 1)),
                  CheckpointError);
  CHECK_THROWS_AS(DeserializeCheckpoint(good + "x"), CheckpointError);
  std::string bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(DeserializeCheckpoint(bad), CheckpointError);
  bad = good;
  bad[8] = 2;
  CHECK_THROWS_AS(DeserializeCheckpoint(bad), CheckpointError);
  bad = good;
  bad[40] = static_cast<char>(bad[40] + 1);
  CHECK_THROWS_AS(DeserializeCheckpoint(bad), CheckpointError);
  CHECK_THROWS_AS(LoadCheckpoint("/nonexistent/c.bin"), CheckpointError);
}

TEST_CASE("interface mismatch names both shapes") {
  const Checkpoint ckpt{PolicyNet::Initialize({12, 4, 8}, 1, 0.0), 0, 0};
  try {
    RequireShape(ckpt, PolicyShape{}, "old.bin");
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    const std::string what = e.what();
    CHECK(what.find("old.bin") != std::string::npos);
    CHECK(what.find("obs=12") != std::string::npos);
    CHECK(what.find("obs=17") != std::string::npos);
  }
  const Checkpoint ok{PolicyNet::Initialize({17, 6, 8}, 1, 0.0), 0, 0};
  CHECK_NOTHROW(RequireShape(ok, PolicyShape{}, "ok.bin"));
}

}  // TEST_SUITE

}  // namespace
}  // namespace auvsim
