#include <gtest/gtest.h>

#include "sddlab/param_set.hpp"
#include "sddlab/tensor.hpp"

namespace sddlab {
namespace {

TEST(Tensor, DefaultIsScalarZero) {
  Tensor<double> t;
  EXPECT_EQ(t.rank(), 0u);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.item(), 0.0);
}

TEST(Tensor, ShapeAndValues) {
  Tensor<float> t({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.extent(0), 2u);
  EXPECT_EQ(t.extent(1), 3u);
  EXPECT_EQ(t.at(1, 2), 6.0f);
  EXPECT_EQ(shape_string(t.shape()), "[2x3]");
}

TEST(Tensor, RejectsWrongValueCount) {
  EXPECT_THROW(Tensor<float>({2, 2}, {1, 2, 3}), DimensionError);
}

TEST(Tensor, RejectsZeroExtent) { EXPECT_THROW(Tensor<float>(Shape{3, 0}), DimensionError); }

TEST(Tensor, ItemNeedsSingleElement) {
  EXPECT_THROW(Tensor<double>::full({2}, 1.0).item(), ContractError);
}

TEST(Tensor, ReshapeKeepsValues) {
  Tensor<double> t({2, 3}, {1, 2, 3, 4, 5, 6});
  auto r = t.reshaped({3, 2});
  EXPECT_EQ(r.at(2, 1), 6.0);
  EXPECT_THROW(t.reshaped({4, 2}), DimensionError);
}

TEST(Tensor, CastPreservesShape) {
  Tensor<double> t({2}, {0.5, -1.25});
  auto f = t.cast<float>();
  EXPECT_EQ(f.shape(), t.shape());
  EXPECT_EQ(f[1], -1.25f);
}

TEST(Tensor, AllFinite) {
  Tensor<double> t({2}, {1.0, 2.0});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(t.all_finite());
}

TEST(ParamSet, NamesAreUniqueKeys) {
  ParamSet<float> p;
  p.add("a", Tensor<float>({2, 2}), true);
  p.add("b", Tensor<float>({3}), false);
  EXPECT_THROW(p.add("a", Tensor<float>({1}), false), ConfigError);
  EXPECT_EQ(p.index_of("b"), 1u);
  EXPECT_EQ(p.total_elements(), 7u);
  EXPECT_EQ(p.prunable_elements(), 4u);
  EXPECT_THROW(p.at("c"), ConfigError);
}

}  // namespace
}  // namespace sddlab
