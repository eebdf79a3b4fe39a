#include "roiadapt/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "roiadapt/error.hpp"

namespace roiadapt::codec {
namespace {

constexpr std::array<int, 64> kZigzagTable = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

constexpr std::array<int, 64> kLuminanceNatural = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> to_zigzag(const std::array<int, 64>& natural) {
  std::array<int, 64> out{};
  for (int i = 0; i < 64; ++i) out[i] = natural[kZigzagTable[i]];
  return out;
}

struct DctBasis {
  std::array<std::array<double, 8>, 8> c{};  // c[u][x]
  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x)
        c[u][x] = alpha * std::cos((2.0 * x + 1.0) * u * std::numbers::pi / 16.0);
    }
  }
};

const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

void check_qf(int qf) {
  if (qf < 1 || qf > 100) throw DomainError("quality factor out of range [1,100]: " + std::to_string(qf));
}

// Blocks are coded unless fully inside the ROI.
bool block_covered(const RoiBox& roi, int bx, int by) {
  return bx >= roi.x0 && by >= roi.y0 && bx + kBlock <= roi.x0 + roi.w && by + kBlock <= roi.y0 + roi.h;
}

RoiBox chroma_roi(const RoiBox& roi) {
  const int x0 = roi.x0 / 2;
  const int y0 = roi.y0 / 2;
  const int x1 = (roi.x0 + roi.w + 1) / 2;
  const int y1 = (roi.y0 + roi.h + 1) / 2;
  return {x0, y0, x1 - x0, y1 - y0};
}

struct PlaneView {
  const std::uint8_t* data;
  int width;
  int height;
};

void append_roi(std::vector<std::uint8_t>& out, const PlaneView& p, const RoiBox& roi) {
  for (int y = roi.y0; y < roi.y0 + roi.h; ++y) {
    const auto* row = p.data + static_cast<std::size_t>(y) * p.width;
    out.insert(out.end(), row + roi.x0, row + roi.x0 + roi.w);
  }
}

void collect_blocks(std::vector<LevelBlock>& out, const PlaneView& p, const RoiBox& roi, const QuantTable& qt) {
  SampleBlock block{};
  for (int by = 0; by < p.height; by += kBlock) {
    for (int bx = 0; bx < p.width; bx += kBlock) {
      if (block_covered(roi, bx, by)) continue;
      for (int y = 0; y < kBlock; ++y)
        for (int x = 0; x < kBlock; ++x)
          block[y * kBlock + x] = p.data[static_cast<std::size_t>(by + y) * p.width + bx + x];
      out.push_back(quantize_block(forward_dct_block(block), qt));
    }
  }
}

std::size_t count_blocks(int width, int height, const RoiBox& roi) {
  std::size_t n = 0;
  for (int by = 0; by < height; by += kBlock)
    for (int bx = 0; bx < width; bx += kBlock)
      if (!block_covered(roi, bx, by)) ++n;
  return n;
}

void reconstruct(std::vector<std::uint8_t>& plane, int width, int height, const RoiBox& roi,
                 const QuantTable& qt, std::span<const LevelBlock> blocks, std::size_t& next) {
  for (int by = 0; by < height; by += kBlock) {
    for (int bx = 0; bx < width; bx += kBlock) {
      if (block_covered(roi, bx, by)) continue;
      const auto samples = inverse_dct_block(dequantize_block(blocks[next++], qt));
      for (int y = 0; y < kBlock; ++y)
        for (int x = 0; x < kBlock; ++x)
          plane[static_cast<std::size_t>(by + y) * width + bx + x] =
              static_cast<std::uint8_t>(std::clamp(std::lround(samples[y * kBlock + x]), 0L, 255L));
    }
  }
}

void paste_roi(std::vector<std::uint8_t>& plane, int width, const RoiBox& roi,
               std::span<const std::uint8_t> payload, std::size_t& pos) {
  for (int y = roi.y0; y < roi.y0 + roi.h; ++y) {
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(pos), roi.w,
                plane.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(y) * width + roi.x0));
    pos += static_cast<std::size_t>(roi.w);
  }
}

std::vector<std::uint8_t> pad_plane(int width, int height, const std::vector<std::uint8_t>& src,
                                    int padded_w, int padded_h) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(padded_w) * padded_h);
  for (int y = 0; y < padded_h; ++y) {
    const int sy = std::min(y, height - 1);
    for (int x = 0; x < padded_w; ++x) {
      const int sx = std::min(x, width - 1);
      out[static_cast<std::size_t>(y) * padded_w + x] = src[static_cast<std::size_t>(sy) * width + sx];
    }
  }
  return out;
}

std::vector<std::uint8_t> subsample(const std::vector<std::uint8_t>& full, int width, int height) {
  const int cw = width / 2;
  const int ch = height / 2;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(cw) * ch);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      const auto i = static_cast<std::size_t>(2 * y) * width + 2 * x;
      const int sum = full[i] + full[i + 1] + full[i + width] + full[i + width + 1];
      out[static_cast<std::size_t>(y) * cw + x] = static_cast<std::uint8_t>((sum + 2) / 4);
    }
  }
  return out;
}

Frame build(int width, int height, std::vector<std::uint8_t> luma, const std::vector<std::uint8_t>* cb,
            const std::vector<std::uint8_t>* cr, const RoiBox& roi) {
  if (width <= 0 || height <= 0) throw DomainError("frame dimensions must be positive");
  const auto n = static_cast<std::size_t>(width) * height;
  if (luma.size() != n) throw DomainError("luma plane size does not match dimensions");
  if (cb && (cb->size() != n || cr->size() != n)) throw DomainError("chroma plane size does not match dimensions");
  if (!roi.fits(width, height)) throw DomainError("ROI lies outside the frame");
  const int align = cb ? 2 * kBlock : kBlock;
  const int pw = (width + align - 1) / align * align;
  const int ph = (height + align - 1) / align * align;
  if (pw > 0xFFFF || ph > 0xFFFF) throw DomainError("frame too large for the container");
  Frame f;
  f.width = pw;
  f.height = ph;
  f.pad_right = pw - width;
  f.pad_bottom = ph - height;
  f.roi = roi;
  f.luma = (pw == width && ph == height) ? std::move(luma) : pad_plane(width, height, luma, pw, ph);
  if (cb) {
    f.cb = subsample(pad_plane(width, height, *cb, pw, ph), pw, ph);
    f.cr = subsample(pad_plane(width, height, *cr, pw, ph), pw, ph);
  }
  return f;
}

void put_u16(std::vector<std::uint8_t>& out, int v) {
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xFF));
}

int get_u16(std::span<const std::uint8_t> in, std::size_t pos) { return (in[pos] << 8) | in[pos + 1]; }

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t pos) {
  return (std::uint32_t{in[pos]} << 24) | (std::uint32_t{in[pos + 1]} << 16) | (std::uint32_t{in[pos + 2]} << 8) |
         std::uint32_t{in[pos + 3]};
}

}  // namespace

const std::array<int, 64> kZigzag = kZigzagTable;
const std::array<int, 64> kJpegLuminanceBase = to_zigzag(kLuminanceNatural);

bool RoiBox::fits(int width, int height) const {
  return x0 >= 0 && y0 >= 0 && w >= 0 && h >= 0 && x0 + w <= width && y0 + h <= height;
}

RoiBox snap_outward(const RoiBox& roi, int width, int height, int align) {
  if (roi.w == 0 || roi.h == 0) return {roi.x0, roi.y0, 0, 0};
  const int x0 = roi.x0 / align * align;
  const int y0 = roi.y0 / align * align;
  const int x1 = std::min((roi.x0 + roi.w + align - 1) / align * align, width);
  const int y1 = std::min((roi.y0 + roi.h + align - 1) / align * align, height);
  return {x0, y0, x1 - x0, y1 - y0};
}

Frame make_frame(int width, int height, std::vector<std::uint8_t> luma, const RoiBox& roi) {
  return build(width, height, std::move(luma), nullptr, nullptr, roi);
}

Frame make_frame(int width, int height, std::vector<std::uint8_t> luma, const std::vector<std::uint8_t>& cb_full,
                 const std::vector<std::uint8_t>& cr_full, const RoiBox& roi) {
  return build(width, height, std::move(luma), &cb_full, &cr_full, roi);
}

QuantTable make_quant_table(int qf, const std::array<int, 64>& base) {
  check_qf(qf);
  const long scale = qf < 50 ? 5000 / qf : 200 - 2 * qf;
  QuantTable qt;
  qt.qf = qf;
  for (int i = 0; i < 64; ++i) {
    const long v = (base[i] * scale + 50) / 100;
    qt.entries[i] = static_cast<int>(std::clamp(v, 1L, 255L));
  }
  return qt;
}

CoeffBlock forward_dct_block(const SampleBlock& block) {
  const auto& c = basis().c;
  std::array<double, 64> tmp{};
  // rows: tmp[y][u] = sum_x c[u][x] * s[y][x]
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += c[u][x] * (static_cast<double>(block[y * 8 + x]) - 128.0);
      tmp[y * 8 + u] = acc;
    }
  CoeffBlock out{};
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += c[v][y] * tmp[y * 8 + u];
      out[v * 8 + u] = acc;
    }
  return out;
}

std::array<double, 64> inverse_dct_block(const CoeffBlock& coeffs) {
  const auto& c = basis().c;
  std::array<double, 64> tmp{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += c[v][y] * coeffs[v * 8 + u];
      tmp[y * 8 + u] = acc;
    }
  std::array<double, 64> out{};
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += c[u][x] * tmp[y * 8 + u];
      out[y * 8 + x] = acc + 128.0;
    }
  return out;
}

LevelBlock quantize_block(const CoeffBlock& coeffs, const QuantTable& qt) {
  LevelBlock levels{};
  for (int i = 0; i < 64; ++i)
    levels[i] = static_cast<int>(std::lround(coeffs[kZigzag[i]] / qt.entries[i]));
  return levels;
}

CoeffBlock dequantize_block(const LevelBlock& levels, const QuantTable& qt) {
  CoeffBlock coeffs{};
  for (int i = 0; i < 64; ++i) coeffs[kZigzag[i]] = static_cast<double>(levels[i]) * qt.entries[i];
  return coeffs;
}

void put_uvarint(std::vector<std::uint8_t>& out, std::uint64_t value) {
  while (value >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(value | 0x80));
    value >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(value));
}

std::uint64_t get_uvarint(std::span<const std::uint8_t> in, std::size_t& pos) {
  std::uint64_t value = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (pos >= in.size()) throw ParseError("truncated varint");
    const std::uint8_t byte = in[pos++];
    value |= static_cast<std::uint64_t>(byte & 0x7F) << shift;
    if ((byte & 0x80) == 0) return value;
  }
  throw ParseError("varint longer than 10 bytes");
}

std::vector<std::uint8_t> encode_levels(std::span<const LevelBlock> blocks) {
  std::vector<std::uint8_t> out;
  out.reserve(blocks.size() * 4);
  int prev_dc = 0;
  std::vector<std::pair<int, int>> pairs;
  for (const auto& b : blocks) {
    put_uvarint(out, zigzag_encode(b[0] - prev_dc));
    prev_dc = b[0];
    pairs.clear();
    int run = 0;
    for (int i = 1; i < 64; ++i) {
      if (b[i] == 0) {
        ++run;
      } else {
        pairs.emplace_back(run, b[i]);
        run = 0;
      }
    }
    put_uvarint(out, pairs.size());
    for (const auto& [r, level] : pairs) {
      put_uvarint(out, static_cast<std::uint64_t>(r));
      put_uvarint(out, zigzag_encode(level));
    }
  }
  return out;
}

std::vector<LevelBlock> decode_levels(std::span<const std::uint8_t> bytes, std::size_t block_count) {
  std::vector<LevelBlock> blocks(block_count);
  std::size_t pos = 0;
  std::int64_t prev_dc = 0;
  for (auto& b : blocks) {
    b.fill(0);
    prev_dc += zigzag_decode(get_uvarint(bytes, pos));
    b[0] = static_cast<int>(prev_dc);
    const auto npairs = get_uvarint(bytes, pos);
    if (npairs > 63) throw ParseError("block declares more than 63 AC coefficients");
    std::size_t idx = 1;
    for (std::uint64_t k = 0; k < npairs; ++k) {
      idx += get_uvarint(bytes, pos);
      const auto level = zigzag_decode(get_uvarint(bytes, pos));
      if (idx >= 64) throw ParseError("AC run overflows block");
      b[idx++] = static_cast<int>(level);
    }
  }
  if (pos != bytes.size()) throw ParseError("trailing bytes after background payload");
  return blocks;
}

std::vector<std::uint8_t> EncodedFrame::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(byte_size());
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(version);
  put_u16(out, width);
  put_u16(out, height);
  put_u16(out, roi.x0);
  put_u16(out, roi.y0);
  put_u16(out, roi.w);
  put_u16(out, roi.h);
  out.push_back(static_cast<std::uint8_t>(qf));
  put_u32(out, static_cast<std::uint32_t>(roi_payload.size()));
  put_u32(out, static_cast<std::uint32_t>(bg_payload.size()));
  out.insert(out.end(), roi_payload.begin(), roi_payload.end());
  out.insert(out.end(), bg_payload.begin(), bg_payload.end());
  return out;
}

EncodedFrame EncodedFrame::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw ParseError("container shorter than header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw ParseError("bad container magic");
  EncodedFrame ef;
  ef.version = bytes[4];
  if (ef.version != kVersionLuma && ef.version != kVersionChroma420)
    throw ParseError("unsupported container version " + std::to_string(ef.version));
  ef.width = get_u16(bytes, 5);
  ef.height = get_u16(bytes, 7);
  ef.roi = {get_u16(bytes, 9), get_u16(bytes, 11), get_u16(bytes, 13), get_u16(bytes, 15)};
  ef.qf = bytes[17];
  const std::size_t roi_len = get_u32(bytes, 18);
  const std::size_t bg_len = get_u32(bytes, 22);
  if (kHeaderBytes + roi_len + bg_len != bytes.size()) throw ParseError("payload lengths disagree with container size");
  const int align = ef.version == kVersionChroma420 ? 2 * kBlock : kBlock;
  if (ef.width == 0 || ef.height == 0 || ef.width % align || ef.height % align)
    throw ParseError("container dimensions are not block aligned");
  if (!ef.roi.fits(ef.width, ef.height)) throw ParseError("container ROI outside frame");
  if (ef.qf < 1 || ef.qf > 100) throw ParseError("container qf out of range");
  auto it = bytes.begin() + kHeaderBytes;
  ef.roi_payload.assign(it, it + static_cast<std::ptrdiff_t>(roi_len));
  ef.bg_payload.assign(it + static_cast<std::ptrdiff_t>(roi_len), bytes.end());
  return ef;
}

EncodedFrame encode_frame(const Frame& frame, const RoiBox& roi, int qf) {
  check_qf(qf);
  if (frame.width % kBlock || frame.height % kBlock) throw DomainError("frame dimensions must be multiples of 8");
  if (!roi.fits(frame.width, frame.height)) throw DomainError("ROI lies outside the frame");
  const QuantTable qt = make_quant_table(qf);
  EncodedFrame ef;
  ef.version = frame.has_chroma() ? kVersionChroma420 : kVersionLuma;
  ef.width = frame.width;
  ef.height = frame.height;
  ef.roi = snap_outward(roi, frame.width, frame.height);
  ef.qf = qf;

  std::vector<LevelBlock> blocks;
  const PlaneView luma{frame.luma.data(), frame.width, frame.height};
  append_roi(ef.roi_payload, luma, ef.roi);
  collect_blocks(blocks, luma, ef.roi, qt);
  if (frame.has_chroma()) {
    const RoiBox croi = chroma_roi(ef.roi);
    for (const auto* plane : {&frame.cb, &frame.cr}) {
      const PlaneView view{plane->data(), frame.width / 2, frame.height / 2};
      append_roi(ef.roi_payload, view, croi);
      collect_blocks(blocks, view, croi, qt);
    }
  }
  ef.bg_payload = encode_levels(blocks);
  return ef;
}

Frame decode_frame(const EncodedFrame& ef) {
  if (!ef.roi.fits(ef.width, ef.height)) throw ParseError("container ROI outside frame");
  const QuantTable qt = make_quant_table(ef.qf);
  const bool chroma = ef.version == kVersionChroma420;
  const int cw = ef.width / 2;
  const int ch = ef.height / 2;
  const RoiBox croi = chroma_roi(ef.roi);

  std::size_t expected_roi = static_cast<std::size_t>(ef.roi.area());
  std::size_t nblocks = count_blocks(ef.width, ef.height, ef.roi);
  if (chroma) {
    expected_roi += 2 * static_cast<std::size_t>(croi.area());
    nblocks += 2 * count_blocks(cw, ch, croi);
  }
  if (ef.roi_payload.size() != expected_roi) throw ParseError("ROI payload length does not match ROI box");
  const auto blocks = decode_levels(ef.bg_payload, nblocks);

  Frame f;
  f.width = ef.width;
  f.height = ef.height;
  f.roi = ef.roi;
  f.luma.assign(static_cast<std::size_t>(ef.width) * ef.height, 0);
  std::size_t next_block = 0;
  std::size_t roi_pos = 0;
  reconstruct(f.luma, ef.width, ef.height, ef.roi, qt, blocks, next_block);
  paste_roi(f.luma, ef.width, ef.roi, ef.roi_payload, roi_pos);
  if (chroma) {
    for (auto* plane : {&f.cb, &f.cr}) {
      plane->assign(static_cast<std::size_t>(cw) * ch, 0);
      reconstruct(*plane, cw, ch, croi, qt, blocks, next_block);
      paste_roi(*plane, cw, croi, ef.roi_payload, roi_pos);
    }
  }
  return f;
}

double compression_ratio(const Frame& frame, const EncodedFrame& encoded) {
  return static_cast<double>(frame.raw_bytes()) / static_cast<double>(encoded.byte_size());
}

}  // namespace roiadapt::codec
