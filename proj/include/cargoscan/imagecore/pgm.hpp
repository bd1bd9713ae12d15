#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "cargoscan/common/grid.hpp"
#include "cargoscan/imagecore/image.hpp"

namespace cargoscan::imagecore {

// 16-bit binary PGM (P5, maxval 65535, big-endian samples). Decoded pixel
// values are raw / 65535; encoding rounds v * 65535 to the nearest integer.
TransmissionImage decode_pgm16(std::string_view bytes);
std::string encode_pgm16(const TransmissionImage& img);

// load_image also applies pixel_pitch_mm from a "<path>.meta" sidecar when
// one exists.
TransmissionImage load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const TransmissionImage& img);

// 8-bit P5 writer used for heatmaps and label-map debug exports.
std::string encode_pgm8(const Grid<std::uint8_t>& grid);
void save_pgm8(const std::filesystem::path& path, const Grid<std::uint8_t>& grid);
Grid<std::uint8_t> decode_pgm8(std::string_view bytes);

// Metadata sidecar: one key=value pair per line; '#' starts a comment.
using Metadata = std::map<std::string, std::string>;
Metadata parse_metadata(std::string_view text);
std::string format_metadata(const Metadata& meta);
std::filesystem::path sidecar_path(const std::filesystem::path& image_path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace cargoscan::imagecore
