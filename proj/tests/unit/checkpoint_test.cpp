#include <fstream>

#include <gtest/gtest.h>

#include "sddlab/checkpoint.hpp"
#include "sddlab/io.hpp"
#include "sddlab/vit.hpp"
#include "test_util.hpp"

namespace sddlab {
namespace {

Checkpoint sample_checkpoint() {
  vit::ViTConfig c;
  c.embed_dim = 8;
  c.num_heads = 2;
  c.depth = 1;
  c.num_classes = 4;
  Checkpoint ck;
  ck.prune_iter = 3;
  ck.params = vit::init_params<float>(c, 21);
  ck.mask = pruning::PruneMask::dense(ck.params);
  for (int k = 0; k < 3; ++k) ck.mask = pruning::magnitude_prune(ck.params, ck.mask, 0.2);
  ck.meta = {{"seed", 21}, {"note", "unit"}};
  return ck;
}

void expect_same(const Checkpoint& a, const Checkpoint& b) {
  EXPECT_EQ(a.prune_iter, b.prune_iter);
  ASSERT_EQ(a.params.size(), b.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    EXPECT_EQ(a.params[i].name, b.params[i].name);
    EXPECT_EQ(a.params[i].prunable, b.params[i].prunable);
    EXPECT_EQ(a.params[i].value, b.params[i].value);
  }
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_EQ(a.meta, b.meta);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto dir = testing::scratch_dir("ckpt_roundtrip");
  const auto ck = sample_checkpoint();
  save_checkpoint(dir / "a.ckpt", ck);
  const auto back = load_checkpoint(dir / "a.ckpt");
  expect_same(ck, back);
  save_checkpoint(dir / "b.ckpt", back);
  EXPECT_EQ(io::read_file(dir / "a.ckpt"), io::read_file(dir / "b.ckpt"));
  EXPECT_DOUBLE_EQ(back.mask.keep_fraction(), ck.mask.keep_fraction());
  EXPECT_EQ(back.mask.rounds(), 3u);
}

TEST(Checkpoint, InMemoryRoundTrip) {
  const auto ck = sample_checkpoint();
  const auto bytes = serialize_checkpoint(ck);
  EXPECT_EQ(bytes.substr(0, 8), "SDDCKPT1");
  expect_same(ck, deserialize_checkpoint(bytes, "mem"));
}

TEST(Checkpoint, FlippedPayloadByteNamesFile) {
  const auto dir = testing::scratch_dir("ckpt_corrupt");
  save_checkpoint(dir / "c.ckpt", sample_checkpoint());
  auto bytes = io::read_file(dir / "c.ckpt");
  bytes[bytes.size() - 10] ^= 0x40;
  std::ofstream(dir / "c.ckpt", std::ios::binary | std::ios::trunc) << bytes;
  try {
    load_checkpoint(dir / "c.ckpt");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("c.ckpt"), std::string::npos) << msg;
    EXPECT_NE(msg.find("checksum"), std::string::npos) << msg;
  }
}

TEST(Checkpoint, CorruptManifestDetected) {
  auto bytes = serialize_checkpoint(sample_checkpoint());
  bytes[20] ^= 0x01;
  EXPECT_THROW(deserialize_checkpoint(bytes, "mem"), FormatError);
}

TEST(Checkpoint, TruncationAndMagic) {
  const auto bytes = serialize_checkpoint(sample_checkpoint());
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 1), "mem"), FormatError);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, 12), "mem"), FormatError);
  EXPECT_THROW(deserialize_checkpoint("NOTACKPT" + bytes.substr(8), "mem"), FormatError);
}

TEST(Checkpoint, EveryPayloadByteIsCovered) {
  const auto bytes = serialize_checkpoint(sample_checkpoint());
  // Flip one bit at a stride across the whole file; every flip must fail.
  for (std::size_t i = 0; i < bytes.size(); i += 97) {
    auto copy = bytes;
    copy[i] ^= 0x10;
    EXPECT_THROW(deserialize_checkpoint(copy, "mem"), Error) << "offset " << i;
  }
}

TEST(Checkpoint, MissingFileIsIoError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/x.ckpt"), IoError);
}

TEST(Checkpoint, InitCheckpointHasNegativeIter) {
  auto ck = sample_checkpoint();
  ck.prune_iter = -1;
  EXPECT_EQ(deserialize_checkpoint(serialize_checkpoint(ck), "mem").prune_iter, -1);
}

}  // namespace
}  // namespace sddlab
