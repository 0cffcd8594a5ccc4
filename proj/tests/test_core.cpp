#include "vsraug/core.hpp"

#include <gtest/gtest.h>

#include <array>

using namespace vsraug;

TEST(Stream, SameTagsGiveIdenticalStreams) {
  RngStream a = derive_stream(42, "mix", 0, 0, 0);
  RngStream b = derive_stream(42, "mix", 0, 0, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Stream, DifferentTagsDiverge) {
  const std::array<StreamTags, 4> variants = {StreamTags{"mixx", 0, 0, 0}, StreamTags{"mix", 1, 0, 0},
                                              StreamTags{"mix", 0, 1, 0}, StreamTags{"mix", 0, 0, 1}};
  for (const StreamTags &t : variants) {
    RngStream a = derive_stream(42, StreamTags{"mix", 0, 0, 0});
    RngStream b = derive_stream(42, t);
    int differ = 0;
    for (int i = 0; i < 64; ++i) differ += a.next_u64() != b.next_u64();
    EXPECT_GE(differ, 1) << t.purpose << " " << t.video << t.frame << t.patch;
  }
}

TEST(Stream, DifferentSeedsDifferOnFirstDraw) {
  RngStream a = derive_stream(41, "mix");
  RngStream b = derive_stream(42, "mix");
  EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(Stream, TagFieldsAreNotInterchangeable) {
  EXPECT_NE(StreamTags({"x", 1, 0, 0}).hash(), StreamTags({"x", 0, 1, 0}).hash());
  EXPECT_NE(StreamTags({"x", 0, 1, 0}).hash(), StreamTags({"x", 0, 0, 1}).hash());
}

TEST(Stream, PinnedFirstWords) {
  // Reference words recomputed from the documented recipe.
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char ch : std::string("abc")) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  for (std::uint64_t v : {7ULL, 8ULL, 9ULL}) h = mix(h ^ mix(v + 0x9E3779B97F4A7C15ULL));
  std::uint64_t x = mix(99 ^ mix(h));
  x ^= x >> 12;
  x ^= x << 25;
  x ^= x >> 27;
  RngStream s = derive_stream(99, "abc", 7, 8, 9);
  EXPECT_EQ(s.next_u64(), x * 0x2545F4914F6CDD1DULL);
}

TEST(Stream, UniformMeanAndRange) {
  RngStream s = derive_stream(1, "uniform");
  double sum = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    const double u = s.next_uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_GE(sum / 1e6, 0.499);
  EXPECT_LE(sum / 1e6, 0.501);
}

TEST(Stream, ChoiceSingleOutcome) {
  RngStream s = derive_stream(3, "choice");
  for (int i = 0; i < 100; ++i) EXPECT_EQ(s.next_choice(1), 0u);
}

TEST(Stream, ChoiceFrequencies) {
  RngStream s = derive_stream(5, "choice");
  std::array<int, 4> counts{};
  for (int i = 0; i < 100'000; ++i) ++counts[s.next_choice(4)];
  for (int c : counts) {
    EXPECT_GE(c / 1e5, 0.24);
    EXPECT_LE(c / 1e5, 0.26);
  }
}

TEST(Stream, ChoiceReplays) {
  RngStream a = derive_stream(5, "choice"), b = derive_stream(5, "choice");
  for (int i = 0; i < 50; ++i) EXPECT_EQ(a.next_choice(7), b.next_choice(7));
}

TEST(Stream, ChoiceZeroIsInvalid) {
  RngStream s(1);
  try {
    s.next_choice(0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
}

TEST(Stream, ZeroStateIsReplaced) {
  RngStream s(0);
  EXPECT_NE(s.state(), 0u);
  EXPECT_NE(s.next_u64(), 0u);
}

TEST(Stream, GaussianMoments) {
  RngStream s = derive_stream(11, "gauss");
  double sum = 0, sq = 0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    const double g = s.next_gaussian();
    sum += g;
    sq += g * g;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Frame, ShapeAndIndexing) {
  Frame f(2, 3, 4, 0.25);
  EXPECT_EQ(f.size(), 24u);
  f(1, 2, 3) = 0.75;
  EXPECT_EQ(f.plane(1)[2 * 4 + 3], 0.75);
  EXPECT_THROW(Frame(1, 2, 2, std::vector<double>{1, 2, 3}), Error);
}

TEST(Frame, CropCopiesWindow) {
  Frame f(1, 4, 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) f(0, y, x) = static_cast<double>(y * 4 + x);
  const Frame c = f.crop(1, 2, 2, 3);
  EXPECT_EQ(c.height(), 2u);
  EXPECT_EQ(c.width(), 3u);
  EXPECT_EQ(c(0, 0, 0), 9.0);
  EXPECT_EQ(c(0, 1, 2), 15.0);
  EXPECT_THROW(f.crop(2, 0, 1, 3), Error);
}

TEST(Frame, ClampBoundsValues) {
  Frame f(1, 1, 3, std::vector<double>{-0.5, 0.5, 1.5});
  f.clamp();
  EXPECT_EQ(f.values(), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Video, RejectsMixedShapes) {
  try {
    VideoSequence v({Frame(1, 4, 4), Frame(1, 2, 2)});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::format);
  }
  EXPECT_THROW(VideoSequence(std::vector<Frame>{}), Error);
}

TEST(Error, CodeIsModuleQualified) {
  const Error e(ErrorKind::invalid_argument, "degrade", "x");
  EXPECT_EQ(e.code(), "degrade.invalid-argument");
}
