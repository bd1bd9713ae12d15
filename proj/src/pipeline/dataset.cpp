#include "cargoscan/pipeline/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "cargoscan/common/error.hpp"
#include "cargoscan/imagecore/pgm.hpp"

namespace cargoscan::pipeline {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& what) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail(ErrorKind::kFormat, "bad " + what + " '" + s + "'");
  return v;
}

}  // namespace

std::size_t Dataset::cars() const noexcept {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const DatasetEntry& e) { return e.car; }));
}

std::vector<Roi> parse_rois(const std::string& text) {
  std::vector<Roi> out;
  if (text == "-" || text.empty()) return out;
  for (const auto& item : split(text, ';')) {
    const auto f = split(item, ',');
    if (f.size() != 4) fail(ErrorKind::kFormat, "ROI '" + item + "' is not x,y,w,h");
    Roi r{parse_number<int>(f[0], "ROI x"), parse_number<int>(f[1], "ROI y"), parse_number<int>(f[2], "ROI width"),
          parse_number<int>(f[3], "ROI height")};
    if (!r.valid()) fail(ErrorKind::kFormat, "ROI '" + item + "' has no area");
    out.push_back(r);
  }
  return out;
}

std::string format_rois(const std::vector<Roi>& rois) {
  if (rois.empty()) return "-";
  std::string s;
  for (std::size_t i = 0; i < rois.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(rois[i].x) + "," + std::to_string(rois[i].y) + "," + std::to_string(rois[i].w) + "," +
         std::to_string(rois[i].h);
  }
  return s;
}

Dataset parse_manifest(const std::string& text, const fs::path& base_dir) {
  Dataset d;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, '\t');
    const std::string where = "manifest line " + std::to_string(lineno);
    if (f.size() < 2 || f.size() > 5) fail(ErrorKind::kFormat, where + ": expected 2-5 tab-separated fields");
    DatasetEntry e;
    e.path = fs::path(f[0]);
    if (e.path.is_relative()) e.path = base_dir / e.path;
    if (f[1] == "car") {
      e.car = true;
    } else if (f[1] != "noncar") {
      fail(ErrorKind::kFormat, where + ": label must be car or noncar");
    }
    if (f.size() > 2) e.rois = parse_rois(f[2]);
    if (f.size() > 3 && !f[3].empty()) e.seed = parse_number<std::uint64_t>(f[3], "seed");
    if (f.size() > 4) e.kind = f[4];
    d.entries.push_back(std::move(e));
  }
  return d;
}

Dataset read_manifest(const fs::path& path) {
  return parse_manifest(imagecore::read_file(path), path.parent_path());
}

std::string format_manifest(const Dataset& data, const fs::path& base_dir) {
  std::string out = "# path\tlabel\trois\tseed\tkind\n";
  for (const auto& e : data.entries) {
    fs::path p = e.path;
    if (!base_dir.empty()) {
      const fs::path rel = p.lexically_relative(base_dir);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    out += p.generic_string() + "\t" + (e.car ? "car" : "noncar") + "\t" + format_rois(e.rois) + "\t" +
           std::to_string(e.seed) + "\t" + e.kind + "\n";
  }
  return out;
}

void write_manifest(const fs::path& path, const Dataset& data) {
  imagecore::write_file(path, format_manifest(data, path.parent_path()));
}

}  // namespace cargoscan::pipeline
