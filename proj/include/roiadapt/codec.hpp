#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace roiadapt::codec {

inline constexpr int kBlock = 8;

struct RoiBox {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  long long area() const { return static_cast<long long>(w) * h; }
  bool contains(int x, int y) const { return x >= x0 && x < x0 + w && y >= y0 && y < y0 + h; }
  bool fits(int width, int height) const;
  bool operator==(const RoiBox&) const = default;
};

// Grows `roi` outward so every edge lies on a multiple of `align`, clipped to
// the frame.
RoiBox snap_outward(const RoiBox& roi, int width, int height, int align = kBlock);

// A frame with an 8-bit luma plane and optional 4:2:0 chroma planes. Width and
// height are multiples of 8 (16 when chroma is present); pad_right and
// pad_bottom record how many columns/rows were replicated to get there.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> luma;
  std::vector<std::uint8_t> cb;
  std::vector<std::uint8_t> cr;
  RoiBox roi;
  int pad_right = 0;
  int pad_bottom = 0;

  bool has_chroma() const { return !cb.empty(); }
  std::size_t raw_bytes() const { return luma.size() + cb.size() + cr.size(); }
  std::uint8_t at(int x, int y) const { return luma[static_cast<std::size_t>(y) * width + x]; }
};

// Builds a frame from an arbitrary-sized luma plane, padding by edge
// replication. Throws DomainError if the ROI does not fit the unpadded frame.
Frame make_frame(int width, int height, std::vector<std::uint8_t> luma, const RoiBox& roi);

// Same, with full-resolution Cb/Cr planes that are subsampled to 4:2:0.
Frame make_frame(int width, int height, std::vector<std::uint8_t> luma,
                 const std::vector<std::uint8_t>& cb_full, const std::vector<std::uint8_t>& cr_full,
                 const RoiBox& roi);

// Quantization table, entries stored in zigzag order.
struct QuantTable {
  std::array<int, 64> entries{};
  int qf = 50;
};

// Standard JPEG (Annex K) luminance table in zigzag order.
extern const std::array<int, 64> kJpegLuminanceBase;
// Natural (row-major) index of the i-th zigzag position.
extern const std::array<int, 64> kZigzag;

QuantTable make_quant_table(int qf, const std::array<int, 64>& base = kJpegLuminanceBase);

using SampleBlock = std::array<std::uint8_t, 64>;
using CoeffBlock = std::array<double, 64>;  // natural order
using LevelBlock = std::array<int, 64>;     // zigzag order

// Orthonormal 2-D DCT-II of a level-shifted (-128) 8x8 block.
CoeffBlock forward_dct_block(const SampleBlock& block);
// Inverse of forward_dct_block, +128 restored, no rounding or clamping.
std::array<double, 64> inverse_dct_block(const CoeffBlock& coeffs);

LevelBlock quantize_block(const CoeffBlock& coeffs, const QuantTable& qt);
CoeffBlock dequantize_block(const LevelBlock& levels, const QuantTable& qt);

// LEB128 and zigzag helpers.
void put_uvarint(std::vector<std::uint8_t>& out, std::uint64_t value);
std::uint64_t get_uvarint(std::span<const std::uint8_t> in, std::size_t& pos);
constexpr std::uint64_t zigzag_encode(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}
constexpr std::int64_t zigzag_decode(std::uint64_t u) {
  return static_cast<std::int64_t>(u >> 1) ^ -static_cast<std::int64_t>(u & 1);
}

// Entropy coding of a sequence of quantized blocks. Per block: DC as a
// difference from the previous block's DC, the number of AC pairs, then
// (zero-run, level) pairs over the zigzag scan. All values are LEB128 varints,
// signed ones zigzag-mapped first.
std::vector<std::uint8_t> encode_levels(std::span<const LevelBlock> blocks);
std::vector<LevelBlock> decode_levels(std::span<const std::uint8_t> bytes, std::size_t block_count);

inline constexpr std::array<char, 4> kMagic = {'R', 'O', 'I', '1'};
inline constexpr std::uint8_t kVersionLuma = 1;
inline constexpr std::uint8_t kVersionChroma420 = 2;
inline constexpr std::size_t kHeaderBytes = 26;

struct EncodedFrame {
  std::uint8_t version = kVersionLuma;
  int width = 0;
  int height = 0;
  RoiBox roi;
  int qf = 0;
  std::vector<std::uint8_t> roi_payload;
  std::vector<std::uint8_t> bg_payload;

  int plane_count() const { return version == kVersionChroma420 ? 3 : 1; }
  std::size_t byte_size() const { return kHeaderBytes + roi_payload.size() + bg_payload.size(); }
  std::vector<std::uint8_t> serialize() const;
  // Throws ParseError on bad magic, version, or inconsistent lengths.
  static EncodedFrame parse(std::span<const std::uint8_t> bytes);
};

EncodedFrame encode_frame(const Frame& frame, const RoiBox& roi, int qf);
Frame decode_frame(const EncodedFrame& encoded);

double compression_ratio(const Frame& frame, const EncodedFrame& encoded);

}  // namespace roiadapt::codec
