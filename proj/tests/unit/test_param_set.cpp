#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "fd_oracle.hpp"
#include "gmp/model.hpp"
#include "gmp/param_set.hpp"

using namespace gmp;

namespace {

ParamSet two_params() {
  ParamSet ps;
  ps.add("b", ad::Tensor::matrix(1, 1, {3}, true), Partition::EncoderVideo);
  ps.add("a", ad::Tensor::matrix(1, 2, {1, 2}, true), Partition::EncoderVideo);
  return ps;
}

ParamSet small_model(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.input_dim_v = 5;
  cfg.input_dim_a = 4;
  cfg.encoder_hidden = 6;
  cfg.feature_dim = 3;
  cfg.num_classes = 4;
  cfg.num_domains = 3;
  cfg.seed = seed;
  return init_model(cfg);
}

}  // namespace

TEST(Partition, LabelsRoundTrip) {
  for (auto p : {Partition::EncoderVideo, Partition::EncoderAudio, Partition::Classifier, Partition::Discriminator}) {
    EXPECT_EQ(parse_partition(to_string(p)), p);
  }
  EXPECT_EQ(to_string(Partition::EncoderAudio), "encoder:a");
  EXPECT_THROW(parse_partition("encoder:x"), LookupError);
}

TEST(ParamSet, RejectsDuplicateAndInvalidIds) {
  ParamSet ps = two_params();
  EXPECT_THROW(ps.add("a", ad::Tensor::scalar(1, true), Partition::Classifier), ContractError);
  EXPECT_THROW(ps.add("", ad::Tensor::scalar(1, true), Partition::Classifier), ContractError);
  auto leaf = ad::Tensor::scalar(2, true);
  EXPECT_THROW(ps.add("c", ad::scale(leaf, 2.0), Partition::Classifier), ContractError);
  EXPECT_THROW(ps.get("zzz"), LookupError);
}

TEST(FlattenGrads, SortedOrderConcatenation) {
  ParamSet ps = two_params();
  GradientMap g{{"a", {1, 2}}, {"b", {3}}};
  EXPECT_EQ(flatten_grads(g, ps, Partition::EncoderVideo), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(flatten_grads(g, ps, "encoder:v"), (std::vector<double>{1, 2, 3}));
}

TEST(FlattenGrads, EmptyPartitionGivesEmptyVector) {
  ParamSet ps = two_params();
  GradientMap g{{"a", {1, 2}}, {"b", {3}}};
  EXPECT_TRUE(flatten_grads(g, ps, Partition::Discriminator).empty());
}

TEST(FlattenGrads, RoundTripIsExact) {
  ParamSet ps = small_model(1);
  std::mt19937_64 rng(2);
  GradientMap g;
  for (const auto& id : ps.ids()) g[id] = gmp::testing::gaussian_vector(rng, ps.get(id).size());
  GradientMap back;
  for (auto p : {Partition::EncoderVideo, Partition::EncoderAudio, Partition::Classifier, Partition::Discriminator}) {
    back.merge(unflatten_grads(flatten_grads(g, ps, p), ps, p));
  }
  EXPECT_EQ(back, g);
  EXPECT_THROW(unflatten_grads(std::vector<double>(3), ps, Partition::Classifier), ShapeError);
}

TEST(ParamSet, EveryModelParameterHasOnePartition) {
  ParamSet ps = small_model(0);
  std::size_t total = 0;
  for (auto p : {Partition::EncoderVideo, Partition::EncoderAudio, Partition::Classifier, Partition::Discriminator}) {
    total += ps.ids_in(p).size();
  }
  EXPECT_EQ(total, ps.size());
}

TEST(ApplyUpdate, SubtractsScaledGradient) {
  ParamSet ps = two_params();
  apply_update(ps, GradientMap{{"a", {1, -1}}}, 0.5);
  EXPECT_EQ(ps.get("a").data()[0], 0.5);
  EXPECT_EQ(ps.get("a").data()[1], 2.5);
  EXPECT_EQ(ps.get("b").data()[0], 3.0);
}

TEST(ParamBackward, UnreachedParametersGetZeros) {
  ParamSet ps = two_params();
  auto grads = backward(ad::sum(ps.get("a")), ps);
  EXPECT_EQ(grads.at("a"), (std::vector<double>{1, 1}));
  EXPECT_EQ(grads.at("b"), (std::vector<double>{0}));
}

TEST(Checkpoint, BytesRoundTripBitwise) {
  ParamSet ps = small_model(9);
  ps.get("classifier.bias").mutable_data()[0] = -0.0;
  ps.get("classifier.bias").mutable_data()[1] = 1e-310;
  const auto bytes = encode_checkpoint(ps);
  ParamSet back = decode_checkpoint(bytes);
  EXPECT_TRUE(back.bitwise_equal(ps));
  EXPECT_EQ(encode_checkpoint(back), bytes);
  for (const auto& id : ps.ids()) EXPECT_EQ(back.partition_of(id), ps.partition_of(id));
}

TEST(Checkpoint, FileRoundTrip) {
  ParamSet ps = small_model(4);
  const auto path = std::filesystem::temp_directory_path() / "gmp_param_set_test.gmpc";
  save_checkpoint(ps, path);
  EXPECT_TRUE(load_checkpoint(path).bitwise_equal(ps));
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptInputIsAnIoError) {
  auto bytes = encode_checkpoint(small_model(4));
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(decode_checkpoint(truncated), IoError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), IoError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), IoError);
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.gmpc"), IoError);
}

TEST(ParamSet, CloneIsDeep) {
  ParamSet ps = two_params();
  ParamSet copy = ps.clone();
  copy.get("a").mutable_data()[0] = 100;
  EXPECT_EQ(ps.get("a").data()[0], 1.0);
  EXPECT_FALSE(copy.bitwise_equal(ps));
}
