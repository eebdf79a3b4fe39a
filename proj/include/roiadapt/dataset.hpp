#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roiadapt/codec.hpp"

namespace roiadapt::dataset {

struct FrameSet {
  std::vector<codec::Frame> frames;
  // "loaded:<dir>" or "synthetic:seed=..,n=..,WxH"
  std::string origin;

  std::size_t size() const { return frames.size(); }
  const codec::Frame& operator[](std::size_t i) const { return frames[i]; }
};

struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> pixels;  // interleaved
};

// PNG (8-bit gray/RGB/RGBA/palette) or binary PGM/PPM (P5/P6, maxval 255).
Image read_image(const std::string& path);
void write_pgm(const std::string& path, int width, int height, const std::vector<std::uint8_t>& luma);

// Loads every .png/.ppm/.pgm in `dir` in filename order; annotations CSV
// `frame_index,x0,y0,w,h` indexes that order. Frames are padded to 8-multiples
// and ROIs snapped outward to the block grid.
FrameSet load_frames(const std::string& dir, const std::string& annotations_path, bool with_chroma = false);

// Smooth gradient background with mild noise and a high-detail ROI patch
// covering 10%-40% of the frame. Deterministic per seed.
FrameSet synth_frames(std::uint64_t seed, std::size_t n, int width = 320, int height = 240);

}  // namespace roiadapt::dataset
