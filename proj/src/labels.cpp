#include "punch/labels.hpp"

#include <algorithm>
#include <json.hpp>

#include "punch/error.hpp"

namespace punch {

using nlohmann::json;

LabelState::LabelState(int rows, int cols, std::vector<PixelCoord> positives)
    : rows_(rows), cols_(cols), positives_(std::move(positives)) {
  if (rows <= 0 || cols <= 0) throw DataError("label grid dimensions must be positive");
  mask_.assign(static_cast<std::size_t>(rows) * cols, 0);
  std::sort(positives_.begin(), positives_.end());
  positives_.erase(std::unique(positives_.begin(), positives_.end()), positives_.end());
  for (const auto& p : positives_) {
    if (p.row < 0 || p.row >= rows || p.col < 0 || p.col >= cols) {
      throw DataError("labelled pixel (" + std::to_string(p.row) + "," + std::to_string(p.col) +
                      ") lies outside the " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " scene");
    }
    mask_[static_cast<std::size_t>(p.row) * cols + p.col] = 1;
  }
}

std::vector<PixelCoord> LabelState::unlabelled() const {
  std::vector<PixelCoord> out;
  out.reserve(unlabelled_count());
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      if (!mask_[static_cast<std::size_t>(r) * cols_ + c]) out.push_back({r, c});
    }
  }
  return out;
}

std::string LabelState::to_json() const {
  json pos = json::array();
  for (const auto& p : positives_) pos.push_back({p.row, p.col});
  json j = {{"version", "labels-1"}, {"rows", rows_}, {"cols", cols_}, {"positives", pos}};
  return j.dump();
}

LabelState LabelState::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed label JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("positives")) {
    throw DataError("label JSON needs rows, cols and positives");
  }
  std::vector<PixelCoord> pos;
  for (const auto& e : j["positives"]) {
    if (!e.is_array() || e.size() != 2) throw DataError("each positive must be a [row, col] pair");
    pos.push_back({e[0].get<int>(), e[1].get<int>()});
  }
  return LabelState(j["rows"].get<int>(), j["cols"].get<int>(), std::move(pos));
}

}  // namespace punch
