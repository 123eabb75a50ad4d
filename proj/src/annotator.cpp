#include "punch/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "punch/error.hpp"
#include "punch/rng.hpp"

namespace punch {

namespace {

// Neighbour order for the flood fill and BFS: N, S, W, E.
constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};

}  // namespace

std::size_t ComponentDecomposition::total_size() const {
  std::size_t n = 0;
  for (const auto& c : components) n += c.size();
  return n;
}

ComponentDecomposition connected_components(const ClassGrid& gt, std::uint16_t positive_class) {
  const std::size_t n = static_cast<std::size_t>(gt.rows) * gt.cols;
  std::vector<int> owner(n, -1);
  ComponentDecomposition out;
  std::vector<PixelCoord> stack;
  for (int r = 0; r < gt.rows; ++r) {
    for (int c = 0; c < gt.cols; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * gt.cols + c;
      if (gt.ids[idx] != positive_class || owner[idx] >= 0) continue;
      const int id = static_cast<int>(out.components.size());
      auto& comp = out.components.emplace_back();
      owner[idx] = id;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        comp.push_back(p);
        for (int k = 0; k < 4; ++k) {
          const int rr = p.row + kDr[k], cc = p.col + kDc[k];
          if (rr < 0 || rr >= gt.rows || cc < 0 || cc >= gt.cols) continue;
          const std::size_t j = static_cast<std::size_t>(rr) * gt.cols + cc;
          if (gt.ids[j] == positive_class && owner[j] < 0) {
            owner[j] = id;
            stack.push_back({rr, cc});
          }
        }
      }
      std::sort(comp.begin(), comp.end());
    }
  }
  if (out.components.empty()) {
    throw DataError("class " + std::to_string(positive_class) + " has no pixels in the ground truth");
  }
  return out;
}

std::size_t annotation_quota(double fraction, std::size_t population) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("annotation fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  const auto quota = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(population) + 0.5));
  if (quota == 0) {
    throw ConfigError("annotation quota rounds to 0 (fraction " + std::to_string(fraction) +
                      " of " + std::to_string(population) + " pixels)");
  }
  return std::min(quota, population);
}

LabelState annotate_uniform(const ClassGrid& gt, const AnnotationRequest& request) {
  const auto comps = connected_components(gt, request.positive_class);
  std::vector<PixelCoord> pool;
  for (const auto& c : comps.components) pool.insert(pool.end(), c.begin(), c.end());
  std::sort(pool.begin(), pool.end());
  const std::size_t quota = annotation_quota(request.fraction, pool.size());

  // Partial Fisher-Yates: the first `quota` slots are a uniform subset.
  Rng rng(request.seed);
  for (std::size_t i = 0; i < quota; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(quota);
  return LabelState(gt.rows, gt.cols, std::move(pool));
}

std::vector<PixelCoord> blob_sequence(const ClassGrid& gt, const AnnotationRequest& request) {
  const auto comps = connected_components(gt, request.positive_class);
  const std::size_t quota = annotation_quota(request.fraction, comps.total_size());

  std::vector<int> owner(static_cast<std::size_t>(gt.rows) * gt.cols, -1);
  for (std::size_t k = 0; k < comps.components.size(); ++k) {
    for (const auto& p : comps.components[k]) owner[static_cast<std::size_t>(p.row) * gt.cols + p.col] = static_cast<int>(k);
  }
  std::vector<bool> comp_done(comps.components.size(), false);
  std::vector<bool> taken(owner.size(), false);

  Rng rng(request.seed);
  std::vector<PixelCoord> seq;
  seq.reserve(quota);
  while (seq.size() < quota) {
    // Uniform over positive pixels in components not yet visited.
    std::size_t remaining = 0;
    for (std::size_t k = 0; k < comps.components.size(); ++k) {
      if (!comp_done[k]) remaining += comps.components[k].size();
    }
    std::size_t pick = uniform_index(rng, remaining);
    PixelCoord start{};
    std::size_t comp_id = 0;
    for (std::size_t k = 0; k < comps.components.size(); ++k) {
      if (comp_done[k]) continue;
      if (pick < comps.components[k].size()) {
        start = comps.components[k][pick];
        comp_id = k;
        break;
      }
      pick -= comps.components[k].size();
    }
    comp_done[comp_id] = true;

    std::deque<PixelCoord> queue{start};
    taken[static_cast<std::size_t>(start.row) * gt.cols + start.col] = true;
    while (!queue.empty() && seq.size() < quota) {
      const PixelCoord p = queue.front();
      queue.pop_front();
      seq.push_back(p);
      for (int k = 0; k < 4; ++k) {
        const int rr = p.row + kDr[k], cc = p.col + kDc[k];
        if (rr < 0 || rr >= gt.rows || cc < 0 || cc >= gt.cols) continue;
        const std::size_t j = static_cast<std::size_t>(rr) * gt.cols + cc;
        if (owner[j] == static_cast<int>(comp_id) && !taken[j]) {
          taken[j] = true;
          queue.push_back({rr, cc});
        }
      }
    }
  }
  return seq;
}

LabelState annotate_blob(const ClassGrid& gt, const AnnotationRequest& request) {
  return LabelState(gt.rows, gt.cols, blob_sequence(gt, request));
}

LabelState annotate(const ClassGrid& gt, const AnnotationRequest& request) {
  return request.model == AnnotationModel::uniform ? annotate_uniform(gt, request)
                                                   : annotate_blob(gt, request);
}

const char* to_string(AnnotationModel m) { return m == AnnotationModel::uniform ? "uniform" : "blob"; }

AnnotationModel annotation_model_from_string(const std::string& s) {
  if (s == "uniform") return AnnotationModel::uniform;
  if (s == "blob") return AnnotationModel::blob;
  throw ConfigError("unknown annotation model '" + s + "' (expected uniform or blob)");
}

}  // namespace punch
