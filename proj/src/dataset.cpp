#include "roiadapt/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "roiadapt/error.hpp"
#include "roiadapt/textio.hpp"

namespace roiadapt::dataset {
namespace {

namespace fs = std::filesystem;

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

Image read_png(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw ParseError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw ParseError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ParseError("png_create_info_struct failed");
  }
  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("malformed PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("unsupported PNG channel layout: " + path);
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  rows.resize(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Image read_pnm(const std::string& path) {
  const std::string data = textio::read_file(path);
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_ws();
    int v = 0;
    bool any = false;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
      v = v * 10 + (data[pos++] - '0');
      any = true;
    }
    if (!any) throw ParseError("malformed PNM header: " + path);
    return v;
  };
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '6'))
    throw ParseError("not a binary PGM/PPM: " + path);
  pos = 2;
  Image img;
  img.channels = data[1] == '6' ? 3 : 1;
  img.width = read_int();
  img.height = read_int();
  if (read_int() != 255) throw ParseError("only maxval 255 supported: " + path);
  ++pos;  // single whitespace before raster
  const auto n = static_cast<std::size_t>(img.width) * img.height * img.channels;
  if (img.width <= 0 || img.height <= 0 || data.size() < pos + n) throw ParseError("truncated PNM raster: " + path);
  img.pixels.assign(data.begin() + static_cast<std::ptrdiff_t>(pos), data.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

bool is_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

codec::Frame to_frame(const Image& img, const codec::RoiBox& roi, bool with_chroma) {
  const auto n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<std::uint8_t> y(n), cb, cr;
  if (img.channels == 1) {
    y = img.pixels;
  } else {
    if (with_chroma) {
      cb.resize(n);
      cr.resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double r = img.pixels[3 * i], g = img.pixels[3 * i + 1], b = img.pixels[3 * i + 2];
      y[i] = clamp_u8(0.299 * r + 0.587 * g + 0.114 * b);
      if (with_chroma) {
        cb[i] = clamp_u8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
        cr[i] = clamp_u8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
      }
    }
  }
  if (!roi.fits(img.width, img.height)) throw DomainError("annotation ROI lies outside its image");
  codec::Frame f = (with_chroma && img.channels == 3) ? codec::make_frame(img.width, img.height, std::move(y), cb, cr, roi)
                                                      : codec::make_frame(img.width, img.height, std::move(y), roi);
  f.roi = codec::snap_outward(roi, f.width, f.height);
  return f;
}

}  // namespace

Image read_image(const std::string& path) {
  auto ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" ? read_png(path) : read_pnm(path);
}

void write_pgm(const std::string& path, int width, int height, const std::vector<std::uint8_t>& luma) {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(luma.begin(), luma.end());
  textio::write_file(path, out);
}

FrameSet load_frames(const std::string& dir, const std::string& annotations_path, bool with_chroma) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && is_image(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DomainError("no PNG/PPM/PGM images in " + dir);

  std::map<int, codec::RoiBox> boxes;
  for (const auto& row : textio::read_csv(annotations_path, {"frame_index", "x0", "y0", "w", "h"})) {
    const int idx = textio::to_int(row, 0);
    const std::string at = annotations_path + ":" + std::to_string(row.line) + ": ";
    if (idx < 0 || static_cast<std::size_t>(idx) >= files.size())
      throw DomainError(at + "annotation references frame " + std::to_string(idx) + " of " +
                        std::to_string(files.size()));
    if (!boxes.emplace(idx, codec::RoiBox{textio::to_int(row, 1), textio::to_int(row, 2), textio::to_int(row, 3),
                                          textio::to_int(row, 4)})
             .second)
      throw DomainError(at + "duplicate annotation for frame " + std::to_string(idx));
  }

  FrameSet set;
  set.origin = "loaded:" + dir;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto it = boxes.find(static_cast<int>(i));
    if (it == boxes.end()) throw DomainError("missing annotation for frame " + std::to_string(i) + " (" + files[i].string() + ")");
    try {
      set.frames.push_back(to_frame(read_image(files[i].string()), it->second, with_chroma));
    } catch (const DomainError& e) {
      throw DomainError(files[i].string() + ": " + e.what());
    }
  }
  return set;
}

FrameSet synth_frames(std::uint64_t seed, std::size_t n, int width, int height) {
  if (n == 0) throw DomainError("synthetic frame set must be nonempty");
  if (width < 16 || height < 16) throw DomainError("synthetic frames must be at least 16x16");
  width = (width + 7) / 8 * 8;
  height = (height + 7) / 8 * 8;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double frame_area = static_cast<double>(width) * height;
  constexpr double kPi = std::numbers::pi;

  FrameSet set;
  std::ostringstream origin;
  origin << "synthetic:seed=" << seed << ",n=" << n << "," << width << "x" << height;
  set.origin = origin.str();
  for (std::size_t k = 0; k < n; ++k) {
    // ROI box on the 8-pixel grid with area fraction in [0.10, 0.40].
    codec::RoiBox roi;
    while (true) {
      const double frac = 0.10 + 0.30 * uni(rng);
      const double aspect = 0.6 + uni(rng);
      const int w = std::clamp(static_cast<int>(std::lround(std::sqrt(frac * frame_area * aspect) / 8)) * 8, 8, width);
      const int h = std::clamp(static_cast<int>(std::lround(frac * frame_area / w / 8)) * 8, 8, height);
      const double a = static_cast<double>(w) * h / frame_area;
      if (a < 0.10 || a > 0.40) continue;
      roi.w = w;
      roi.h = h;
      roi.x0 = static_cast<int>(uni(rng) * ((width - w) / 8 + 1)) * 8;
      roi.y0 = static_cast<int>(uni(rng) * ((height - h) / 8 + 1)) * 8;
      roi.x0 = std::min(roi.x0, width - w);
      roi.y0 = std::min(roi.y0, height - h);
      break;
    }

    const double base = 70.0 + 60.0 * uni(rng);
    const double gx = (uni(rng) - 0.5) * 80.0;
    const double gy = (uni(rng) - 0.5) * 80.0;
    const double wave_amp = 8.0 + 10.0 * uni(rng);
    const double wave_fx = (0.5 + 1.5 * uni(rng)) / width;
    const double wave_fy = (0.5 + 1.5 * uni(rng)) / height;
    const double wave_phase = 2 * kPi * uni(rng);
    // ROI texture: a few short-period gratings plus strong noise.
    const double t_mean = 100.0 + 60.0 * uni(rng);
    std::array<double, 3> tf{}, tphase{}, tangle{};
    for (int i = 0; i < 3; ++i) {
      tf[i] = 1.0 / (3.0 + 6.0 * uni(rng));
      tphase[i] = 2 * kPi * uni(rng);
      tangle[i] = kPi * uni(rng);
    }

    std::vector<std::uint8_t> luma(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double v;
        if (roi.contains(x, y)) {
          v = t_mean;
          for (int i = 0; i < 3; ++i) {
            const double u = x * std::cos(tangle[i]) + y * std::sin(tangle[i]);
            v += 22.0 * std::sin(2 * kPi * tf[i] * u + tphase[i]);
          }
          v += 12.0 * noise(rng);
        } else {
          v = base + gx * x / width + gy * y / height +
              wave_amp * std::sin(2 * kPi * (wave_fx * x + wave_fy * y) + wave_phase) + 1.0 * noise(rng);
        }
        luma[static_cast<std::size_t>(y) * width + x] = clamp_u8(v);
      }
    }
    set.frames.push_back(codec::make_frame(width, height, std::move(luma), roi));
  }
  return set;
}

}  // namespace roiadapt::dataset
