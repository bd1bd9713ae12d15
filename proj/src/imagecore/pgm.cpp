#include "cargoscan/imagecore/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cargoscan/common/error.hpp"

namespace cargoscan::imagecore {

namespace {

struct Header {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

// Reads the next whitespace-delimited integer, skipping '#' comments.
long read_header_int(std::string_view bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    fail(ErrorKind::kFormat, "malformed PGM header");
  }
  long value = 0;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    value = value * 10 + (bytes[pos] - '0');
    if (value > 1'000'000'000L) fail(ErrorKind::kFormat, "PGM header value out of range");
    ++pos;
  }
  return value;
}

Header parse_header(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    fail(ErrorKind::kFormat, "not a binary PGM (missing P5 magic)");
  }
  std::size_t pos = 2;
  Header h;
  h.width = static_cast<int>(read_header_int(bytes, pos));
  h.height = static_cast<int>(read_header_int(bytes, pos));
  h.maxval = static_cast<int>(read_header_int(bytes, pos));
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    fail(ErrorKind::kFormat, "PGM header not terminated");
  }
  h.data_offset = pos + 1;
  if (h.width < 1 || h.height < 1) fail(ErrorKind::kFormat, "PGM dimensions must be positive");
  return h;
}

}  // namespace

TransmissionImage decode_pgm16(std::string_view bytes) {
  const Header h = parse_header(bytes);
  if (h.maxval != 65535) {
    fail(ErrorKind::kUnsupportedDepth, "maxval " + std::to_string(h.maxval) + " (need 65535)");
  }
  const std::size_t count = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  if (bytes.size() - h.data_offset < count * 2) fail(ErrorKind::kFormat, "truncated PGM data");
  TransmissionImage img(h.width, h.height, 0.0);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  double* out = img.pixels.data();
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned raw = (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1];
    out[i] = static_cast<double>(raw) / 65535.0;
  }
  return img;
}

std::string encode_pgm16(const TransmissionImage& img) {
  std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                       "\n65535\n";
  std::string out = header;
  out.resize(header.size() + img.pixels.size() * 2);
  char* dst = out.data() + header.size();
  for (double v : img.pixels.values()) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    const auto raw = static_cast<unsigned>(std::lround(clamped * 65535.0));
    *dst++ = static_cast<char>((raw >> 8) & 0xFF);
    *dst++ = static_cast<char>(raw & 0xFF);
  }
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
  return image_path.string() + ".meta";
}

TransmissionImage load_image(const std::filesystem::path& path) {
  TransmissionImage img = decode_pgm16(read_file(path));
  const auto meta_path = sidecar_path(path);
  if (std::filesystem::exists(meta_path)) {
    const Metadata meta = parse_metadata(read_file(meta_path));
    if (auto it = meta.find("pixel_pitch_mm"); it != meta.end()) {
      try {
        img.pixel_pitch_mm = std::stod(it->second);
      } catch (const std::exception&) {
        fail(ErrorKind::kFormat, "bad pixel_pitch_mm in " + meta_path.string());
      }
    }
  }
  return img;
}

void save_image(const std::filesystem::path& path, const TransmissionImage& img) {
  write_file(path, encode_pgm16(img));
}

std::string encode_pgm8(const Grid<std::uint8_t>& grid) {
  std::string out = "P5\n" + std::to_string(grid.width()) + " " + std::to_string(grid.height()) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(grid.data()), grid.size());
  return out;
}

void save_pgm8(const std::filesystem::path& path, const Grid<std::uint8_t>& grid) {
  write_file(path, encode_pgm8(grid));
}

Grid<std::uint8_t> decode_pgm8(std::string_view bytes) {
  const Header h = parse_header(bytes);
  if (h.maxval != 255) fail(ErrorKind::kUnsupportedDepth, "expected 8-bit PGM");
  const std::size_t count = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  if (bytes.size() - h.data_offset < count) fail(ErrorKind::kFormat, "truncated PGM data");
  std::vector<std::uint8_t> data(count);
  std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes.data() + h.data_offset), count,
              data.begin());
  return Grid<std::uint8_t>(h.width, h.height, std::move(data));
}

Metadata parse_metadata(std::string_view text) {
  Metadata meta;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return meta;
}

std::string format_metadata(const Metadata& meta) {
  std::string out;
  for (const auto& [k, v] : meta) out += k + "=" + v + "\n";
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace cargoscan::imagecore
