#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cargoscan/imagecore/image.hpp"

namespace cargoscan::pipeline {

using imagecore::Roi;

// One manifest line: path <TAB> car|noncar <TAB> rois <TAB> seed <TAB> kind.
// rois is "x,y,w,h;x,y,w,h" or "-"; seed and kind are optional. Blank lines
// and lines starting with '#' are ignored. Relative paths resolve against
// the manifest's directory.
struct DatasetEntry {
  std::filesystem::path path;
  bool car = false;
  std::vector<Roi> rois;
  std::uint64_t seed = 0;
  std::string kind;
  bool operator==(const DatasetEntry&) const = default;
};

struct Dataset {
  std::vector<DatasetEntry> entries;
  std::size_t cars() const noexcept;
};

Dataset parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
Dataset read_manifest(const std::filesystem::path& path);
// Paths are written relative to base_dir when they lie under it.
std::string format_manifest(const Dataset& data, const std::filesystem::path& base_dir);
void write_manifest(const std::filesystem::path& path, const Dataset& data);

std::string format_rois(const std::vector<Roi>& rois);
std::vector<Roi> parse_rois(const std::string& text);

}  // namespace cargoscan::pipeline
