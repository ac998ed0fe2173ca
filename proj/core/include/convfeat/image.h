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

#ifndef CONVFEAT_IMAGE_H_
#define CONVFEAT_IMAGE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "convfeat/tensor.h"
#include "convfeat/weights.h"

namespace convfeat {

// 8-bit RGB image, interleaved, row-major.
struct ImageRecord {
  std::string id;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
  std::optional<std::string> label;

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t ch) const {
    return pixels[(y * width + x) * 3 + ch];
  }
};

// Binary PPM (P6, maxval 255).
ImageRecord read_ppm(const std::string& path);
void write_ppm(const ImageRecord& image, const std::string& path);

struct ImageListEntry {
  std::string path;
  std::optional<std::string> label;
};

// One `path<TAB>label` per line (label optional). Relative paths resolve
// against the list file's directory; blank lines and '#' comments skipped.
std::vector<ImageListEntry> read_image_list(const std::string& list_path);
std::vector<ImageRecord> load_images(const std::vector<ImageListEntry>& list);

struct PreprocessOptions {
  std::size_t warp_size = 256;
  std::size_t crop_size = 224;
  // Fallback when the bundle has no mean image.
  std::array<float, 3> channel_mean = {104.0f, 117.0f, 123.0f};
};

// Warp size used for a network whose input is crop x crop, keeping the
// 256:224 ratio of the reference pipeline.
std::size_t DefaultWarpSize(std::size_t crop_size);

// Crops to crop_size and warps to the mean image's size when one is given,
// else to DefaultWarpSize(crop_size).
PreprocessOptions PreprocessFor(std::size_t crop_size,
                                const std::optional<Tensor>& mean_image);

// Bilinear resize of every channel to out_h x out_w ignoring aspect ratio,
// half-pixel centers. Returns (1, 3, out_h, out_w) floats in [0, 255].
Tensor warp_bilinear(const ImageRecord& image, std::size_t out_h,
                     std::size_t out_w);

// Warp to warp_size^2, subtract the mean, center crop to crop_size^2.
Tensor preprocess(const ImageRecord& image, const WeightBundle& bundle,
                  const PreprocessOptions& options = {});

}  // namespace convfeat

#endif  // CONVFEAT_IMAGE_H_
