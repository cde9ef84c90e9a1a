#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "olm/errors.hpp"
#include "olm/localization.hpp"
#include "olm/parts.hpp"
#include "olm/pipeline.hpp"

namespace olm {

using json = nlohmann::ordered_json;

inline json to_json(const BoundingBox& b) {
  return {{"x_min", b.x_min},
          {"y_min", b.y_min},
          {"x_max", b.x_max},
          {"y_max", b.y_max},
          {"pixel_count", b.pixel_count}};
}

inline BoundingBox box_from_json(const json& j) {
  try {
    BoundingBox b;
    b.x_min = j.at("x_min").get<int>();
    b.y_min = j.at("y_min").get<int>();
    b.x_max = j.at("x_max").get<int>();
    b.y_max = j.at("y_max").get<int>();
    b.pixel_count = j.contains("pixel_count") ? j.at("pixel_count").get<std::size_t>() : 0;
    if (b.x_min > b.x_max || b.y_min > b.y_max) throw ValidationError("box has min > max");
    return b;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid box record: ") + e.what());
  }
}

inline json to_json(const PipelineConfig& c) {
  json layers = json::array();
  for (const auto& l : c.layers) layers.push_back(l);
  return {{"alpha", c.alpha},
          {"connectivity", static_cast<int>(c.connectivity)},
          {"keep", to_string(c.keep)},
          {"max_boxes", c.max_boxes ? json(*c.max_boxes) : json(nullptr)},
          {"k", c.parts_k},
          {"lambda", c.lambda},
          {"seed", c.seed},
          {"layers", layers}};
}

inline json box_record(const std::string& image, const std::vector<BoundingBox>& boxes) {
  json arr = json::array();
  for (const auto& b : boxes) arr.push_back(to_json(b));
  return {{"image", image}, {"boxes", arr}};
}

struct BoxRecord {
  std::string image;
  std::vector<BoundingBox> boxes;
};

inline BoxRecord box_record_from_json(const json& j) {
  try {
    BoxRecord r;
    r.image = j.contains("image") ? j.at("image").get<std::string>() : std::string{};
    for (const auto& b : j.at("boxes")) r.boxes.push_back(box_from_json(b));
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid box file: ") + e.what());
  }
}

inline json parts_record(const std::string& image, const std::vector<PartSpec>& parts) {
  json arr = json::array();
  for (const auto& p : parts) {
    arr.push_back({{"index", p.index},
                   {"center_x", p.center_x},
                   {"center_y", p.center_y},
                   {"side", p.side}});
  }
  return {{"image", image}, {"parts", arr}};
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// Writes to a sibling temporary file and renames it into place.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace olm
