#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "rslf/io/cloud_io.hpp"
#include "rslf/io/container.hpp"
#include "rslf/io/pfm.hpp"
#include "rslf/io/png.hpp"

namespace rslf::io {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("rslf_io_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ImageF random_map(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd(0.0f, 10.0f);
  ImageF m(w, h);
  for (auto& v : m.data()) v = nd(rng);
  return m;
}

TEST(Pfm, RoundTripIsExact) {
  TempDir dir;
  const ImageF m = random_map(17, 9, 1);
  write_pfm(dir.path() / "m.pfm", m);
  EXPECT_EQ(read_pfm(dir.path() / "m.pfm"), m);
}

TEST(Pfm, WritesLittleEndianNegativeScale) {
  const auto bytes = encode_pfm(ImageF(3, 2, 1.0f));
  const std::string head(bytes.begin(), bytes.begin() + 12);
  EXPECT_EQ(head.substr(0, 12), "Pf\n3 2\n-1.0\n");
  EXPECT_EQ(bytes.size(), 12u + 6 * 4);
}

TEST(Pfm, ReadsBigEndianWithByteSwap) {
  // Written independently: header, then rows bottom-to-top, big-endian floats.
  const ImageF m = random_map(4, 3, 2);
  std::string text = "Pf\n4 3\n1.0\n";
  std::vector<unsigned char> buf(text.begin(), text.end());
  for (int v = 2; v >= 0; --v)
    for (int u = 0; u < 4; ++u) {
      std::uint32_t bits;
      std::memcpy(&bits, &m(u, v), 4);
      for (int s = 24; s >= 0; s -= 8) buf.push_back(static_cast<unsigned char>(bits >> s));
    }
  EXPECT_EQ(decode_pfm(buf, "be.pfm"), m);
}

TEST(Pfm, MalformedHeaderIsParseError) {
  const std::string bad[] = {"P6\n1 1\n-1.0\n", "Pf\nx 1\n-1.0\n", "Pf\n1 1\n0\n",
                             "Pf\n-3 1\n-1.0\n", "Pf\n99999999 99999999\n-1.0\n", ""};
  for (const auto& s : bad)
    EXPECT_THROW(decode_pfm(std::vector<unsigned char>(s.begin(), s.end()), "bad"), DataError) << s;
}

TEST(Pfm, TruncatedFilesErrorWithoutCrashing) {
  const auto full = encode_pfm(random_map(5, 4, 3));
  for (std::size_t n = 0; n < full.size(); ++n) {
    std::vector<unsigned char> cut(full.begin(), full.begin() + n);
    EXPECT_THROW(decode_pfm(cut, "cut"), DataError) << n;
  }
}

TEST(Png, Gray16RoundTripAtQuantization) {
  TempDir dir;
  ImageF img(6, 5);
  std::mt19937 rng(4);
  for (auto& v : img.data()) v = std::uniform_int_distribution<int>(0, 65535)(rng) / 65535.0f;
  write_gray16(dir.path() / "g.png", img);
  EXPECT_EQ(read_gray(dir.path() / "g.png"), img);
}

TEST(Png, EightBitInputsAreAccepted) {
  TempDir dir;
  PngRaster r{3, 1, 1, 8, {0, 128, 255}};
  write_png(dir.path() / "e.png", r);
  const ImageF g = read_gray(dir.path() / "e.png");
  EXPECT_FLOAT_EQ(g(1, 0), 128.0f / 255.0f);
  EXPECT_FLOAT_EQ(g(2, 0), 1.0f);
}

TEST(Png, MaskRoundTrip) {
  TempDir dir;
  Mask m(4, 3, 0);
  m(1, 1) = 1;
  m(3, 2) = 1;
  write_mask(dir.path() / "m.png", m);
  EXPECT_EQ(read_mask(dir.path() / "m.png"), m);
  EXPECT_EQ(read_png(dir.path() / "m.png").samples[4 + 1], 255);
}

TEST(Png, TruncatedFilesError) {
  const auto full = encode_png(PngRaster{4, 4, 1, 16, std::vector<std::uint16_t>(16, 1000)});
  for (std::size_t n = 0; n < full.size(); n += 3) {
    std::vector<unsigned char> cut(full.begin(), full.begin() + n);
    EXPECT_THROW(decode_png(cut, "cut"), DataError) << n;
  }
}

LightField4D random_lf(int A, int W, int H, std::uint64_t seed) {
  std::mt19937 rng(seed);
  LightField4D lf(A, W, H);
  for (auto& v : lf.data()) v = std::uniform_int_distribution<int>(0, 65535)(rng) / 65535.0f;
  return lf;
}

TEST(Container, RoundTripIsBitExactAt16Bit) {
  TempDir dir;
  const LightField4D lf = random_lf(3, 8, 6, 5);
  LFIntrinsics intr;
  intr.u0 = 3.5;
  intr.v0 = 2.5;
  intr.F = intr.f * intr.w / 8;
  const RSTiming timing = RSTiming::for_height(6, intr.v0);
  const MotionParams gt{Vec3(0.1, 0.2, 1.0 / 3.0), Vec3(-0.05, 0.0, 1e-17)};
  write_lightfield(lf, intr, timing, dir.path(), gt, {{"preset", "test"}});
  const LoadedLightField back = read_lightfield(dir.path());
  EXPECT_EQ(back.lf, lf);
  EXPECT_EQ(back.intr, intr);
  EXPECT_EQ(back.timing, timing);
  ASSERT_TRUE(back.manifest.motion_gt.has_value());
  EXPECT_EQ(*back.manifest.motion_gt, gt);
  EXPECT_EQ(back.manifest.extra.at("preset"), "test");
}

TEST(Container, ColorRoundTrip) {
  TempDir dir;
  LightField4D lf(1, 2, 2);
  std::vector<float> rgb(12);
  for (int i = 0; i < 12; ++i) rgb[i] = (i * 5000) / 65535.0f;
  lf.set_color(rgb);
  write_lightfield(lf, LFIntrinsics{}, RSTiming{}, dir.path());
  const LoadedLightField back = read_lightfield(dir.path());
  EXPECT_EQ(back.lf.channels(), 3);
  EXPECT_EQ(back.lf.color_data(), lf.color_data());
}

TEST(Container, TamperedSaiIsCorruption) {
  TempDir dir;
  write_lightfield(random_lf(3, 4, 4, 6), LFIntrinsics{}, RSTiming{}, dir.path());
  auto bytes = read_file(dir.path() / "sai_01_02.png");
  bytes[bytes.size() / 2] ^= 0x5a;
  write_file(dir.path() / "sai_01_02.png", bytes.data(), bytes.size());
  EXPECT_THROW(read_lightfield(dir.path()), CorruptionError);
}

TEST(Container, MissingMetaNamesThePath) {
  TempDir dir;
  try {
    read_lightfield(dir.path());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("meta.json"), std::string::npos);
  }
}

TEST(Container, UnknownVersionIsVersionError) {
  TempDir dir;
  write_lightfield(random_lf(1, 2, 2, 7), LFIntrinsics{}, RSTiming{}, dir.path());
  auto j = Json::parse(read_file(dir.path() / "meta.json"));
  j["schema_version"] = 99;
  write_file(dir.path() / "meta.json", j.dump());
  EXPECT_THROW(read_lightfield(dir.path()), VersionError);
}

TEST(CloudBin, RoundTripOfFloatRepresentableValues) {
  TempDir dir;
  GaussianCloud cloud;
  cloud.background = 0.25;
  for (int i = 0; i < 5; ++i)
    cloud.gaussians.push_back({Point3(0.5 * i, -0.125, 1.0 + i), 1.5, 0.0625 * i});
  write_cloud(dir.path() / "cloud.bin", cloud);
  EXPECT_EQ(read_cloud(dir.path() / "cloud.bin"), cloud);
  const auto bytes = read_file(dir.path() / "cloud.bin");
  EXPECT_EQ(bytes.size(), 20u + 5 * 20);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RSLF");
  EXPECT_EQ(cloud_to_json(cloud).at("count"), 5);
}

TEST(CloudBin, TruncatedOrForeignFilesError) {
  GaussianCloud cloud;
  cloud.gaussians.push_back({Point3(1, 2, 3), 1.0, 0.5});
  const auto full = encode_cloud(cloud);
  for (std::size_t n = 0; n < full.size(); ++n)
    EXPECT_THROW(decode_cloud(std::vector<unsigned char>(full.begin(), full.begin() + n), "cut"), DataError);
  auto bad = full;
  bad[4] = 7;
  EXPECT_THROW(decode_cloud(bad, "v"), VersionError);
}

TEST(Hash, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc", 3),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace rslf::io
