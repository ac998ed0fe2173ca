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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace convfeat {
namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string HeaderToken(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

std::size_t HeaderNumber(std::istream& in, const std::string& path) {
  const std::string tok = HeaderToken(in);
  if (tok.empty() ||
      !std::all_of(tok.begin(), tok.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    Fail(ErrorCode::kFormatError, "bad PPM header in '" + path + "'");
  }
  return std::stoul(tok);
}

}  // namespace

ImageRecord read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot open image '" + path + "'");
  if (HeaderToken(in) != "P6") {
    Fail(ErrorCode::kFormatError, "'" + path + "' is not a binary PPM (P6)");
  }
  ImageRecord img;
  img.id = path;
  img.width = HeaderNumber(in, path);
  img.height = HeaderNumber(in, path);
  const std::size_t maxval = HeaderNumber(in, path);
  if (maxval != 255) {
    Fail(ErrorCode::kFormatError, "'" + path + "' must use maxval 255");
  }
  if (img.width == 0 || img.height == 0) {
    Fail(ErrorCode::kDegenerateImage, "'" + path + "' has a zero dimension");
  }
  img.pixels.resize(img.width * img.height * 3);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    Fail(ErrorCode::kFormatError, "truncated pixel data in '" + path + "'");
  }
  return img;
}

void write_ppm(const ImageRecord& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write '" + path + "'");
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

std::vector<ImageListEntry> read_image_list(const std::string& list_path) {
  std::ifstream in(list_path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open image list '" + list_path + "'");
  const std::filesystem::path base =
      std::filesystem::path(list_path).parent_path();
  std::vector<ImageListEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    ImageListEntry e;
    const auto tab = line.find('\t');
    std::string p = tab == std::string::npos ? line : line.substr(0, tab);
    if (tab != std::string::npos) e.label = line.substr(tab + 1);
    const std::filesystem::path fp(p);
    e.path = fp.is_absolute() ? p : (base / fp).string();
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ImageRecord> load_images(const std::vector<ImageListEntry>& list) {
  std::vector<ImageRecord> images;
  images.reserve(list.size());
  for (const ImageListEntry& e : list) {
    ImageRecord img = read_ppm(e.path);
    img.id = std::filesystem::path(e.path).filename().string();
    img.label = e.label;
    images.push_back(std::move(img));
  }
  return images;
}

std::size_t DefaultWarpSize(std::size_t crop_size) {
  return static_cast<std::size_t>(
      std::lround(static_cast<double>(crop_size) * 256.0 / 224.0));
}

Tensor warp_bilinear(const ImageRecord& image, std::size_t out_h,
                     std::size_t out_w) {
  if (image.height == 0 || image.width == 0 ||
      image.pixels.size() != image.height * image.width * 3) {
    Fail(ErrorCode::kDegenerateImage,
         "image '" + image.id + "' has no pixels or a bad buffer size");
  }
  Tensor out(Shape4{1, 3, out_h, out_w});
  const double sy = static_cast<double>(image.height) / out_h;
  const double sx = static_cast<double>(image.width) / out_w;
  const double max_y = static_cast<double>(image.height - 1);
  const double max_x = static_cast<double>(image.width - 1);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, max_y);
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, max_x);
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double top = (1.0 - wx) * image.at(y0, x0, ch) + wx * image.at(y0, x1, ch);
        const double bottom = (1.0 - wx) * image.at(y1, x0, ch) + wx * image.at(y1, x1, ch);
        out.at(0, ch, y, x) = static_cast<float>((1.0 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

PreprocessOptions PreprocessFor(std::size_t crop_size,
                                const std::optional<Tensor>& mean_image) {
  PreprocessOptions opts;
  opts.crop_size = crop_size;
  opts.warp_size = mean_image ? mean_image->shape().h : DefaultWarpSize(crop_size);
  return opts;
}

Tensor preprocess(const ImageRecord& image, const WeightBundle& bundle,
                  const PreprocessOptions& options) {
  if (options.crop_size > options.warp_size) {
    Fail(ErrorCode::kInvalidArgument, "crop size exceeds warp size");
  }
  Tensor warped = warp_bilinear(image, options.warp_size, options.warp_size);
  if (bundle.mean_image) {
    const Tensor& mean = *bundle.mean_image;
    if (!(mean.shape() == warped.shape())) {
      Fail(ErrorCode::kShapeMismatch,
           "mean image shape " + ToString(mean.shape()) +
               " does not match warped image " + ToString(warped.shape()));
    }
    for (std::size_t i = 0; i < warped.size(); ++i) warped[i] -= mean[i];
  } else {
    const std::size_t plane = options.warp_size * options.warp_size;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      for (std::size_t i = 0; i < plane; ++i) {
        warped[ch * plane + i] -= options.channel_mean[ch];
      }
    }
  }
  const std::size_t off = (options.warp_size - options.crop_size) / 2;
  Tensor out(Shape4{1, 3, options.crop_size, options.crop_size});
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t y = 0; y < options.crop_size; ++y) {
      for (std::size_t x = 0; x < options.crop_size; ++x) {
        out.at(0, ch, y, x) = warped.at(0, ch, y + off, x + off);
      }
    }
  }
  return out;
}

}  // namespace convfeat
