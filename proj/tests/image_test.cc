// Copyright 2026 The convfeat Authors.
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

#include "convfeat/image.h"

#include <filesystem>
#include <fstream>
#include <string>

#include "gtest/gtest.h"

namespace convfeat {
namespace {

namespace fs = std::filesystem;

ImageRecord Constant(std::size_t h, std::size_t w, std::uint8_t v) {
  ImageRecord img;
  img.id = "const";
  img.height = h;
  img.width = w;
  img.pixels.assign(h * w * 3, v);
  return img;
}

ImageRecord Gradient(std::size_t h, std::size_t w) {
  ImageRecord img = Constant(h, w, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      img.pixels[(y * w + x) * 3 + 0] = static_cast<std::uint8_t>(y);
      img.pixels[(y * w + x) * 3 + 1] = static_cast<std::uint8_t>(x);
      img.pixels[(y * w + x) * 3 + 2] = static_cast<std::uint8_t>((x + y) % 256);
    }
  }
  return img;
}

class ImageFilesTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("convfeat_image_test_" + std::string(::testing::UnitTest::GetInstance()
                                                     ->current_test_info()
                                                     ->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  void WriteRaw(const std::string& name, const std::string& bytes) {
    std::ofstream(dir_ / name, std::ios::binary) << bytes;
  }
  fs::path dir_;
};

TEST(PreprocessTest, ConstantImageMinusConstantMeanIsZero) {
  WeightBundle bundle;
  bundle.mean_image = Tensor(Shape4{1, 3, 256, 256}, 128.0f);
  const Tensor out = preprocess(Constant(37, 91, 128), bundle);
  EXPECT_EQ(out, Tensor(Shape4{1, 3, 224, 224}, 0.0f));
}

TEST(PreprocessTest, AspectRatioIsIgnored) {
  WeightBundle bundle;
  const Tensor out = preprocess(Gradient(100, 512), bundle);
  EXPECT_EQ(out.shape(), (Shape4{1, 3, 224, 224}));
  const Tensor warped = warp_bilinear(Gradient(100, 512), 256, 256);
  EXPECT_EQ(warped.shape(), (Shape4{1, 3, 256, 256}));
}

TEST(PreprocessTest, CenterCropOffsetIsSixteen) {
  const ImageRecord img = Gradient(256, 256);
  WeightBundle bundle;
  bundle.mean_image = Tensor(Shape4{1, 3, 256, 256}, 0.0f);
  const Tensor out = preprocess(img, bundle);
  // Same-size warp is the identity, so output (y, x) is input (y+16, x+16).
  for (std::size_t y : {0u, 1u, 100u, 223u}) {
    for (std::size_t x : {0u, 7u, 223u}) {
      EXPECT_EQ(out.at(0, 0, y, x), static_cast<float>(y + 16));
      EXPECT_EQ(out.at(0, 1, y, x), static_cast<float>(x + 16));
    }
  }
}

TEST(PreprocessTest, ChannelMeanFallback) {
  WeightBundle bundle;
  PreprocessOptions opts;
  opts.warp_size = 8;
  opts.crop_size = 4;
  const Tensor out = preprocess(Constant(5, 5, 200), bundle, opts);
  EXPECT_EQ(out.at(0, 0, 0, 0), 96.0f);
  EXPECT_EQ(out.at(0, 1, 3, 3), 83.0f);
  EXPECT_EQ(out.at(0, 2, 2, 1), 77.0f);
}

TEST(PreprocessTest, MeanShapeMismatch) {
  WeightBundle bundle;
  bundle.mean_image = Tensor(Shape4{1, 3, 10, 10});
  EXPECT_THROW(preprocess(Constant(5, 5, 1), bundle), Error);
  EXPECT_EQ(PreprocessFor(224, std::nullopt).warp_size, 256u);
  EXPECT_EQ(PreprocessFor(16, std::nullopt).warp_size, 18u);
  EXPECT_EQ(PreprocessFor(8, Tensor(Shape4{1, 3, 12, 12})).warp_size, 12u);
}

TEST(WarpTest, HalfPixelBilinearUpsample) {
  // 1x2 image [0, 100] upsampled to width 4: centers map to -0.25, 0.25,
  // 0.75, 1.25, clamped into [0, 1].
  ImageRecord img = Constant(1, 2, 0);
  img.pixels = {0, 0, 0, 100, 100, 100};
  const Tensor out = warp_bilinear(img, 1, 4);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0, 0), 0.0f);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0, 1), 25.0f);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0, 2), 75.0f);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0, 3), 100.0f);
}

TEST(WarpTest, DegenerateImage) {
  ImageRecord img;
  try {
    warp_bilinear(img, 4, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateImage);
  }
}

TEST_F(ImageFilesTest, PpmRoundTrip) {
  const ImageRecord img = Gradient(7, 5);
  write_ppm(img, (dir_ / "a.ppm").string());
  const ImageRecord back = read_ppm((dir_ / "a.ppm").string());
  EXPECT_EQ(back.height, 7u);
  EXPECT_EQ(back.width, 5u);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST_F(ImageFilesTest, PpmHeaderComments) {
  WriteRaw("c.ppm", std::string("P6\n# made by hand\n2 1\n255\n") + "abcdef");
  const ImageRecord img = read_ppm((dir_ / "c.ppm").string());
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.at(0, 1, 2), 'f');
}

TEST_F(ImageFilesTest, BadPpmFiles) {
  WriteRaw("p3.ppm", "P3\n1 1\n255\n0 0 0\n");
  WriteRaw("short.ppm", "P6\n2 2\n255\nabc");
  WriteRaw("zero.ppm", "P6\n0 2\n255\n");
  WriteRaw("max.ppm", "P6\n1 1\n65535\nabcdef");
  auto code = [&](const char* name) {
    try {
      read_ppm((dir_ / name).string());
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code("p3.ppm"), ErrorCode::kFormatError);
  EXPECT_EQ(code("short.ppm"), ErrorCode::kFormatError);
  EXPECT_EQ(code("zero.ppm"), ErrorCode::kDegenerateImage);
  EXPECT_EQ(code("max.ppm"), ErrorCode::kFormatError);
  EXPECT_EQ(code("missing.ppm"), ErrorCode::kIoError);
}

TEST_F(ImageFilesTest, ImageListResolvesRelativePaths) {
  fs::create_directories(dir_ / "imgs");
  write_ppm(Constant(2, 2, 9), (dir_ / "imgs" / "x.ppm").string());
  WriteRaw("list.txt", "# header\nimgs/x.ppm\tcat\n\r\nimgs/x.ppm\n");
  const auto list = read_image_list((dir_ / "list.txt").string());
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].label, "cat");
  EXPECT_FALSE(list[1].label.has_value());
  const auto images = load_images(list);
  EXPECT_EQ(images[0].id, "x.ppm");
  EXPECT_EQ(images[0].label, "cat");
  EXPECT_EQ(images[1].pixels, Constant(2, 2, 9).pixels);
}

}  // namespace
}  // namespace convfeat
