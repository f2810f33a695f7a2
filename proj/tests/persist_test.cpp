#include <bit>

#include "aesust/checks.hpp"
#include "aesust/config.hpp"
#include "aesust/persist.hpp"
#include "support.hpp"

using namespace aesust;
using namespace testing_support;

namespace {

// Byte layout written out by hand, independent of the serializer.
std::vector<std::uint8_t> expected_bytes(const std::string& name, const std::vector<std::uint64_t>& dims,
                                         const std::vector<float>& values) {
  std::vector<std::uint8_t> out{'A', 'E', 'S', 'U', '1', 1, 0, 0, 0};
  out.push_back(static_cast<std::uint8_t>(name.size()));
  out.push_back(0);
  out.insert(out.end(), name.begin(), name.end());
  out.push_back(0);  // f32
  out.push_back(static_cast<std::uint8_t>(dims.size()));
  for (std::uint64_t d : dims)
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(d >> (8 * k)));
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  return out;
}

}  // namespace

TEST(Archive, EmptyIsNineBytes) {
  const auto bytes = save_archive(TensorArchive{});
  EXPECT_EQ(bytes.size(), 9u);
  EXPECT_EQ(load_archive(bytes).size(), 0u);
}

TEST(Archive, SingleTensorMatchesHandLayout) {
  TensorArchive a;
  a.add("w", Tensor<float>::from_values({2, 3}, {1, -2, 3.5f, 0, 1e-30f, -0.0f}));
  const auto bytes = save_archive(a);
  // 9 header + 2 name length + 1 name + 2 dtype/rank + 16 dims + 24 payload
  EXPECT_EQ(bytes.size(), 54u);
  EXPECT_EQ(bytes, expected_bytes("w", {2, 3}, {1, -2, 3.5f, 0, 1e-30f, -0.0f}));
}

TEST(Archive, FuzzedRoundTripIsBitExact) {
  const CheckResult r = check_persistence(1000, 42);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Archive, NanPayloadSurvives) {
  TensorArchive a;
  Tensor<double> t({3});
  t[0] = std::bit_cast<double>(std::uint64_t{0x7ff8dead0000beefull});
  t[1] = -std::numeric_limits<double>::infinity();
  t[2] = std::numeric_limits<double>::denorm_min();
  a.add("odd", t);
  const auto back = load_archive(save_archive(a));
  EXPECT_TRUE(bits_equal(std::get<Tensor<double>>(*back.find("odd")), t));
}

TEST(Archive, RejectsMalformedInput) {
  TensorArchive a;
  a.add("x", Tensor<float>({4}));
  const auto good = save_archive(a);

  auto bad_magic = good;
  bad_magic[0] = 'B';
  EXPECT_THROW(load_archive(bad_magic), FormatError);

  auto truncated = good;
  truncated.pop_back();
  try {
    load_archive(truncated);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }

  auto unknown = good;
  unknown[9 + 2 + 1] = 7;
  EXPECT_THROW(load_archive(unknown), FormatError);

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(load_archive(trailing), FormatError);

  // Same entry twice under one count.
  std::vector<std::uint8_t> dup(good.begin(), good.begin() + 5);
  dup.insert(dup.end(), {2, 0, 0, 0});
  dup.insert(dup.end(), good.begin() + 9, good.end());
  dup.insert(dup.end(), good.begin() + 9, good.end());
  EXPECT_THROW(load_archive(dup), FormatError);

  EXPECT_THROW(a.add("x", Tensor<float>({1})), std::runtime_error);
}

TEST(Archive, AtomicFileWriteRoundTrip) {
  TempDir dir;
  TensorArchive a;
  a.add("v", Tensor<double>::from_values({2}, {1, 2}));
  const auto path = dir.path() / "a.aesu";
  write_archive_file(path, a);
  write_archive_file(path, a);
  EXPECT_EQ(read_archive_file(path).size(), 1u);
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) EXPECT_EQ(e.path().filename(), "a.aesu");
}

TEST(Archive, LoadParametersValidatesBeforeWriting) {
  Var<float> w(Tensor<float>({2, 2}), true), b(Tensor<float>({2}), true);
  const ParameterList<float> params{{"m.weight", w}, {"m.bias", b}};
  TensorArchive a;
  a.add("m.weight", Tensor<float>::from_values({2, 2}, {1, 2, 3, 4}));
  try {
    load_parameters(params, a);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("m.bias"), std::string::npos);
  }
  EXPECT_EQ(w.value()[0], 0.0f);
  a.add("m.bias", Tensor<double>({2}));
  EXPECT_THROW(load_parameters(params, a), ConfigError);
  a.set("m.bias", Tensor<float>({1, 2}));
  EXPECT_THROW(load_parameters(params, a), ConfigError);
  a.set("m.bias", Tensor<float>::from_values({2}, {5, 6}));
  load_parameters(params, a);
  EXPECT_EQ(w.value()[3], 4.0f);
  EXPECT_EQ(b.value()[1], 6.0f);
}

TEST(Config, ParsesKeyValueWithComments) {
  const auto entries = parse_config("# header\n a = 1 \n\nb=two # trailing\n");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].key, "a");
  EXPECT_EQ(entries[1].value, "two");
  EXPECT_EQ(entries[1].line, 4);
  EXPECT_THROW(parse_config("novalue\n"), FormatError);
  EXPECT_THROW(parse_config("a = 1\na = 2\n"), FormatError);
  EXPECT_THROW(parse_double({"k", "1.5x", 1}), FormatError);
  EXPECT_THROW(parse_bool({"k", "maybe", 1}), FormatError);
  EXPECT_EQ(parse_integer({"k", "-12", 1}), -12);
}
