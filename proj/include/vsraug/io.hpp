#pragma once

// Frame sequences as numbered PNGs plus a JSON manifest, and the binary noise
// bank container.
//
// Noise bank layout (all integers u32 little-endian):
//
//   offset  0  magic "NSQB"
//   offset  4  version (= 1)
//   offset  8  count
//   offset 12  n
//   offset 16  c
//   offset 20  h
//   offset 24  w
//   offset 28  count * n*c*h*w float32 LE, entry-major, frame-major,
//              channel-major, row-major
//
// Per-entry metadata lives in the JSON sidecar `<path>.meta.json`.

#include "vsraug/core.hpp"
#include "vsraug/noise_bank.hpp"

#include <nlohmann/json.hpp>
#include <png.h>

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>

namespace vsraug {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct SequenceManifest {
  std::vector<fs::path> frames; // resolved paths
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::string color_space; // "gray" | "rgb"
  int bit_depth = 8;
};

namespace detail {

struct PngFileCloser {
  void operator()(std::FILE *f) const noexcept {
    if (f) std::fclose(f);
  }
};
using PngFile = std::unique_ptr<std::FILE, PngFileCloser>;

[[noreturn]] inline void png_error_handler(png_structp png, png_const_charp msg) {
  auto *what = static_cast<std::string *>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

inline std::uint32_t quantize(double v, std::uint32_t max_value) {
  return static_cast<std::uint32_t>(std::floor(clamp01(v) * max_value + 0.5));
}

} // namespace detail

/// Decode one PNG into a normalized frame. Palette and sub-byte gray images are
/// expanded; alpha is dropped.
inline Frame read_png(const fs::path &path, int *bit_depth_out = nullptr) {
  detail::PngFile file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorKind::io, "io", "cannot open " + path.string());

  std::string what;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &what, detail::png_error_handler,
                                           detail::png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::io, "io", "libpng init failed");
  }

  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int depth = 0, color = 0, channels = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::format, "io", "cannot decode " + path.string() + ": " + what);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &depth, &color, nullptr, nullptr, nullptr);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  depth = png_get_bit_depth(png, info);
  channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  pixels.resize(row_bytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3)
    fail(ErrorKind::format, "io", "unsupported channel count in " + path.string());
  Frame frame(static_cast<std::size_t>(channels), height, width);
  const double scale = depth == 16 ? 65535.0 : 255.0;
  for (std::size_t y = 0; y < height; ++y) {
    const unsigned char *row = rows[y];
    for (std::size_t x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t idx = x * channels + c;
        const std::uint32_t raw =
            depth == 16 ? (static_cast<std::uint32_t>(row[2 * idx]) << 8) | row[2 * idx + 1] : row[idx];
        frame(c, y, x) = raw / scale;
      }
    }
  }
  if (bit_depth_out) *bit_depth_out = depth;
  return frame;
}

/// Encode a frame at 8 or 16 bits (round-half-up quantization after clamping).
inline void write_png(const Frame &frame, const fs::path &path, int bit_depth = 8) {
  if (bit_depth != 8 && bit_depth != 16) fail(ErrorKind::invalid_argument, "io", "bit depth must be 8 or 16");
  if (frame.channels() != 1 && frame.channels() != 3)
    fail(ErrorKind::invalid_argument, "io", "png output needs 1 or 3 channels");
  detail::PngFile file(std::fopen(path.c_str(), "wb"));
  if (!file) fail(ErrorKind::io, "io", "cannot write " + path.string());

  const std::size_t c = frame.channels(), h = frame.height(), w = frame.width();
  const std::size_t bytes = bit_depth == 16 ? 2 : 1;
  const std::uint32_t maxv = bit_depth == 16 ? 65535u : 255u;
  std::vector<unsigned char> pixels(h * w * c * bytes);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::uint32_t q = detail::quantize(frame(ch, y, x), maxv);
        const std::size_t idx = ((y * w + x) * c + ch) * bytes;
        if (bytes == 2) {
          pixels[idx] = static_cast<unsigned char>(q >> 8);
          pixels[idx + 1] = static_cast<unsigned char>(q & 0xFF);
        } else {
          pixels[idx] = static_cast<unsigned char>(q);
        }
      }
  std::vector<png_bytep> rows(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = pixels.data() + y * w * c * bytes;

  std::string what;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &what, detail::png_error_handler,
                                            detail::png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "io", "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "io", "cannot encode " + path.string() + ": " + what);
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline json read_json_file(const fs::path &path, const std::string &module = "io") {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, module, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    fail(ErrorKind::format, module, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const json &j, const fs::path &path, const std::string &module = "io") {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, module, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::io, module, "short write to " + path.string());
}

/// Parse a manifest file; frame paths are resolved against its directory.
inline SequenceManifest load_manifest(const fs::path &path) {
  const json j = read_json_file(path);
  SequenceManifest m;
  try {
    m.channels = j.at("channels").get<std::size_t>();
    m.height = j.at("height").get<std::size_t>();
    m.width = j.at("width").get<std::size_t>();
    m.color_space = j.value("color_space", m.channels == 1 ? std::string("gray") : std::string("rgb"));
    m.bit_depth = j.value("bit_depth", 8);
    for (const auto &f : j.at("frames")) m.frames.push_back(path.parent_path() / f.get<std::string>());
  } catch (const json::exception &e) {
    fail(ErrorKind::format, "io", "bad manifest " + path.string() + ": " + e.what());
  }
  if (m.frames.empty()) fail(ErrorKind::format, "io", "manifest lists no frames: " + path.string());
  return m;
}

inline VideoSequence load_sequence(const SequenceManifest &manifest) {
  std::vector<Frame> frames;
  frames.reserve(manifest.frames.size());
  for (const fs::path &p : manifest.frames) {
    if (!fs::exists(p)) fail(ErrorKind::io, "io", "missing frame " + p.string());
    Frame f = read_png(p);
    if (f.channels() != manifest.channels || f.height() != manifest.height || f.width() != manifest.width)
      fail(ErrorKind::format, "io",
           "frame " + p.string() + " is " + std::to_string(f.channels()) + "x" + std::to_string(f.height()) +
               "x" + std::to_string(f.width()) + ", manifest declares " + std::to_string(manifest.channels) +
               "x" + std::to_string(manifest.height) + "x" + std::to_string(manifest.width));
    frames.push_back(std::move(f));
  }
  return VideoSequence(std::move(frames));
}

inline VideoSequence load_sequence(const fs::path &manifest_path) {
  return load_sequence(load_manifest(manifest_path));
}

/// Writes `f000.png`, `f001.png`, ... and `manifest.json` into `dir`.
/// `extra`, when not null, is stored under the manifest's "config" key.
inline SequenceManifest save_sequence(const VideoSequence &video, const fs::path &dir, int bit_depth = 8,
                                      const json &extra = nullptr) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::io, "io", "cannot create directory " + dir.string());

  SequenceManifest m;
  m.channels = video.channels();
  m.height = video.height();
  m.width = video.width();
  m.color_space = m.channels == 1 ? "gray" : "rgb";
  m.bit_depth = bit_depth;
  json names = json::array();
  for (std::size_t i = 0; i < video.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "f%03zu.png", i);
    write_png(video[i], dir / name, bit_depth);
    m.frames.push_back(dir / name);
    names.push_back(name);
  }
  json j = {{"channels", m.channels}, {"height", m.height},         {"width", m.width},
            {"frames", names},        {"color_space", m.color_space}, {"bit_depth", bit_depth}};
  if (!extra.is_null()) j["config"] = extra;
  write_json_file(j, dir / "manifest.json");
  return m;
}

// ---------------------------------------------------------------------------
// Noise bank container
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kBankMagic{'N', 'S', 'Q', 'B'};
inline constexpr std::uint32_t kBankVersion = 1;
inline constexpr std::size_t kBankHeaderBytes = 28;

namespace detail {

inline void put_u32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint32_t checked_u32(std::size_t v) {
  if (v > 0xFFFFFFFFu) fail(ErrorKind::invalid_argument, "io", "bank dimension exceeds u32");
  return static_cast<std::uint32_t>(v);
}

} // namespace detail

inline fs::path bank_sidecar_path(const fs::path &path) { return fs::path(path.string() + ".meta.json"); }

inline json bank_metadata(const NoiseBank &bank) {
  json entries = json::array();
  for (const NoiseEntry &e : bank.entries) {
    entries.push_back({{"video_id", e.video_id}, {"x", e.x}, {"y", e.y}, {"means", e.means},
                       {"variances", e.variances}});
  }
  return {{"format", "NSQB"},
          {"version", kBankVersion},
          {"count", bank.size()},
          {"dims", {{"n", bank.n}, {"c", bank.c}, {"h", bank.h}, {"w", bank.w}}},
          {"variance_convention", "population"},
          {"zero_mean", bank.zero_mean},
          {"thresholds",
           {{"sigma", bank.thresholds.sigma},
            {"mu", bank.thresholds.mu},
            {"sigma_var", bank.thresholds.sigma_var},
            {"sigma_mean", bank.thresholds.sigma_mean}}},
          {"entries", entries}};
}

/// Serialize the container header and payload into a byte string.
inline std::string encode_noise_bank(const NoiseBank &bank) {
  bank.validate();
  std::string out;
  out.reserve(kBankHeaderBytes + bank.size() * bank.entry_values() * 4);
  out.append(kBankMagic.data(), kBankMagic.size());
  detail::put_u32(out, kBankVersion);
  for (std::size_t v : {bank.size(), bank.n, bank.c, bank.h, bank.w}) detail::put_u32(out, detail::checked_u32(v));
  for (const NoiseEntry &e : bank.entries)
    for (float f : e.data) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

/// Writes the container and its metadata sidecar; returns container bytes.
inline std::size_t write_noise_bank(const NoiseBank &bank, const fs::path &path, const json &extra = nullptr) {
  const std::string bytes = encode_noise_bank(bank);
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "io", "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, "io", "short write to " + path.string());
  }
  json meta = bank_metadata(bank);
  if (!extra.is_null()) meta["config"] = extra;
  write_json_file(meta, bank_sidecar_path(path));
  return bytes.size();
}

inline NoiseBank decode_noise_bank(std::string_view bytes) {
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  if (bytes.size() < 8) fail(ErrorKind::format, "io", "noise bank shorter than its header");
  if (std::memcmp(p, kBankMagic.data(), 4) != 0) fail(ErrorKind::format, "io", "bad noise bank magic");
  const std::uint32_t version = detail::get_u32(p + 4);
  if (version != kBankVersion)
    fail(ErrorKind::unsupported_version, "io", "noise bank version " + std::to_string(version) + " unsupported");
  if (bytes.size() < kBankHeaderBytes) fail(ErrorKind::format, "io", "noise bank header truncated");

  NoiseBank bank;
  const std::uint64_t count = detail::get_u32(p + 8);
  bank.n = detail::get_u32(p + 12);
  bank.c = detail::get_u32(p + 16);
  bank.h = detail::get_u32(p + 20);
  bank.w = detail::get_u32(p + 24);
  const std::uint64_t per_entry = static_cast<std::uint64_t>(bank.n) * bank.c * bank.h * bank.w;
  const std::uint64_t expected = kBankHeaderBytes + count * per_entry * 4;
  if (bytes.size() != expected)
    fail(ErrorKind::format, "io",
         "noise bank payload is " + std::to_string(bytes.size() - kBankHeaderBytes) + " bytes, header declares " +
             std::to_string(expected - kBankHeaderBytes));

  bank.entries.resize(count);
  const unsigned char *cursor = p + kBankHeaderBytes;
  for (NoiseEntry &e : bank.entries) {
    e.data.resize(per_entry);
    for (float &f : e.data) {
      f = std::bit_cast<float>(detail::get_u32(cursor));
      cursor += 4;
    }
  }
  return bank;
}

/// Inverse of write_noise_bank. The sidecar is optional; when present its
/// entry count must agree with the container.
inline NoiseBank read_noise_bank(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "io", "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  NoiseBank bank = decode_noise_bank(bytes);

  const fs::path sidecar = bank_sidecar_path(path);
  if (!fs::exists(sidecar)) return bank;
  const json meta = read_json_file(sidecar);
  try {
    const auto &entries = meta.at("entries");
    if (entries.size() != bank.size()) fail(ErrorKind::format, "io", "sidecar entry count disagrees with container");
    for (std::size_t i = 0; i < bank.size(); ++i) {
      NoiseEntry &e = bank.entries[i];
      const json &m = entries[i];
      e.video_id = m.at("video_id").get<std::uint64_t>();
      e.x = m.at("x").get<std::size_t>();
      e.y = m.at("y").get<std::size_t>();
      e.means = m.at("means").get<std::vector<double>>();
      e.variances = m.at("variances").get<std::vector<double>>();
    }
    const json &t = meta.at("thresholds");
    bank.thresholds = {t.at("sigma").get<double>(), t.at("mu").get<double>(), t.at("sigma_var").get<double>(),
                       t.at("sigma_mean").get<double>()};
    bank.zero_mean = meta.value("zero_mean", false);
  } catch (const json::exception &e) {
    fail(ErrorKind::format, "io", "bad noise bank sidecar: " + std::string(e.what()));
  }
  return bank;
}

} // namespace vsraug
