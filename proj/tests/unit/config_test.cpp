#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sddlab/config.hpp"
#include "sddlab/io.hpp"
#include "sddlab/metrics.hpp"
#include "test_util.hpp"

namespace sddlab {
namespace {

TEST(Config, PresetsValidate) {
  EXPECT_NO_THROW(desk_preset().validate());
  EXPECT_NO_THROW(vit_cifar_preset().validate());
}

TEST(Config, DeskPresetShape) {
  const auto c = desk_preset();
  EXPECT_EQ(c.model.depth, 4u);
  EXPECT_EQ(c.model.embed_dim, 64u);
  EXPECT_EQ(c.model.num_heads, 4u);
  EXPECT_EQ(c.data.synthetic.num_classes, 4u);
  EXPECT_EQ(c.data.synthetic.num_samples, 4000u);
  EXPECT_EQ(c.noise.epsilon, 0.3);
  EXPECT_EQ(c.prune.zeta_iter, 0.2);
  EXPECT_EQ(c.prune.zeta_end, 0.99);
  EXPECT_EQ(c.detect.tolerance, 0.005);
}

TEST(Config, CifarPresetPolicy) {
  const auto c = vit_cifar_preset();
  EXPECT_EQ(c.model.embed_dim, 512u);
  EXPECT_EQ(c.model.num_heads, 8u);
  EXPECT_EQ(c.model.num_patches(), 64u);
  EXPECT_EQ(c.train.base_lr, 1e-4);
  EXPECT_EQ(c.train.weight_decay, 0.03);
  EXPECT_EQ(c.train.epochs, 200);
  EXPECT_EQ(c.prune.zeta_end, 0.9999);
  EXPECT_EQ(c.prune.ideal_rounds(), 42u);
}

TEST(Config, RoundTripIsExact) {
  auto c = desk_preset();
  c.train.weight_decay = 0.1 + 0.2;  // not representable in short decimal
  c.train.milestones = {3, 7};
  c.train.decay_exclude = {"bias"};
  c.checkpoint_keep = {3, 9};
  c.data.external_labels = "labels.csv";
  c.seed = 0xffffffffffffull;
  const auto text = dump_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(dump_config(back), text);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, HashChangesWithContent) {
  auto a = desk_preset();
  auto b = a;
  b.train.weight_decay = 0.01;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 8u);
}

TEST(Config, PartialDocumentUsesDefaults) {
  const auto c = parse_config(R"({"model": {"num_classes": 4}, "data": {"synthetic": {"num_classes": 4}}})");
  EXPECT_EQ(c.model.num_classes, 4u);
  EXPECT_EQ(c.train, optim::TrainPolicy{});
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(parse_config(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"train": {"learning_rate": 0.1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"data": {"synthetic": {"pixels": 3}}})"), ConfigError);
}

TEST(Config, BadValuesRejected) {
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"train": {"epochs": "many"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"noise": {"epsilon": 1.5}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"train": {"optimizer": "lion"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"prune": {"zeta_end": 1.0}})"), ConfigError);
}

TEST(Config, CrossModuleChecks) {
  auto c = desk_preset();
  c.model.num_classes = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = desk_preset();
  c.data.synthetic.height = 16;
  EXPECT_THROW(c.validate(), ConfigError);
  c = vit_cifar_preset();
  c.model.image_size = 8;
  EXPECT_THROW(c.validate(), ConfigError);
  c = vit_cifar_preset();
  c.data.train_files.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = desk_preset();
  c.run_id = "a,b";
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, Overrides) {
  const auto base = desk_preset();
  auto c = with_override(base, "train.weight_decay", "0.5");
  EXPECT_EQ(c.train.weight_decay, 0.5);
  c = with_override(base, "run_id", "alpha");
  EXPECT_EQ(c.run_id, "alpha");
  c = with_override(base, "train.schedule", "multistep");
  EXPECT_EQ(c.train.schedule, optim::ScheduleKind::MultiStep);
  c = with_override(base, "checkpoint_keep", "[3]");
  EXPECT_EQ(c.checkpoint_keep, std::vector<int>{3});
  EXPECT_THROW(with_override(base, "train.nope", "1"), ConfigError);
  EXPECT_THROW(with_override(base, "train..lr", "1"), ConfigError);
  EXPECT_THROW(with_override(base, "train.lr", "-1"), ConfigError);
}

TEST(Config, EpochsForRound) {
  auto c = desk_preset();
  EXPECT_EQ(c.epochs_for_round(0), c.train.epochs);
  EXPECT_EQ(c.epochs_for_round(3), c.train.epochs);
  c.retrain_epochs = 7;
  EXPECT_EQ(c.epochs_for_round(0), c.train.epochs);
  EXPECT_EQ(c.epochs_for_round(3), 7);
}

TEST(Config, LoadFileNamesPath) {
  const auto dir = testing::scratch_dir("config_load");
  std::ofstream(dir / "bad.json") << R"({"train": {"epochs": 0}})";
  try {
    load_config(dir / "bad.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
  }
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.0, 0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e-7}) {
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(0.5), "0.5");
  EXPECT_THROW(io::parse_double("1.5x"), FormatError);
  EXPECT_THROW(io::parse_int("x"), FormatError);
}

TEST(Io, Crc32KnownValue) {
  EXPECT_EQ(io::crc32(std::string_view("123456789")), 0xcbf43926u);
  EXPECT_EQ(io::hex32(0xcbf43926u), "cbf43926");
}

TEST(Io, AtomicWriteReplaces) {
  const auto dir = testing::scratch_dir("atomic");
  io::atomic_write(dir / "f.txt", "one");
  io::atomic_write(dir / "f.txt", "two");
  EXPECT_EQ(io::read_file(dir / "f.txt"), "two");
  EXPECT_FALSE(std::filesystem::exists(dir / "f.txt.tmp"));
}

TEST(Metrics, RowRoundTrip) {
  MetricsRow r{"run", 3, 0.488, 0.99, 0.01, 0.7, 1.25, 30, 1e-9, 42};
  const std::string text = metrics_header() + "\n" + format_metrics_row(r) + "\n";
  const auto rows = parse_metrics_csv(text, "mem");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], r);
  EXPECT_EQ(metrics_header(),
            "run_id,prune_iter,sparsity,train_acc,train_loss,val_acc,val_loss,epochs_trained,"
            "lr_final,seed");
  EXPECT_THROW(parse_metrics_csv("a,b\n", "mem"), FormatError);
  EXPECT_THROW(parse_metrics_csv(metrics_header() + "\nrun,1,2\n", "mem"), FormatError);
}

TEST(Metrics, GenericCurveCsv) {
  const auto dir = testing::scratch_dir("curve_csv");
  std::ofstream(dir / "c.csv") << "sparsity,accuracy\n0,0.8\n0.2,0.7\n0.36,0.75\n";
  const auto curve = read_curve_csv(dir / "c.csv");
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_EQ(curve[1].sparsity, 0.2);
  EXPECT_EQ(curve[2].performance, 0.75);
  EXPECT_EQ(curve[2].prune_iter, 2);
  std::ofstream(dir / "bad.csv") << "x,y\n1,2\n";
  EXPECT_THROW(read_curve_csv(dir / "bad.csv"), FormatError);
}

}  // namespace
}  // namespace sddlab
