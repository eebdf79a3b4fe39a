#pragma once

#include <cstdint>
#include <span>

#include "roiadapt/codec.hpp"

namespace roiadapt::quality {

struct SsimResult {
  double mean_ssim = 0.0;
  // Mean over windows of each comparison term.
  double luminance = 0.0;
  double contrast = 0.0;
  double structure = 0.0;
};

// Windowed SSIM with an 11x11 Gaussian window (sigma 1.5), stride 1, valid
// windows only, C1=(0.01*255)^2, C2=(0.03*255)^2, C3=C2/2.
// Throws DomainError on size mismatch or planes smaller than the window.
SsimResult ssim(std::span<const std::uint8_t> f, std::span<const std::uint8_t> g, int width, int height);

// Luma-only SSIM between two frames.
SsimResult ssim(const codec::Frame& f, const codec::Frame& g);

}  // namespace roiadapt::quality
