#pragma once

#include <cstdint>
#include <vector>

#include "punch/cube.hpp"
#include "punch/labels.hpp"

namespace punch {

enum class AnnotationModel { uniform, blob };

struct AnnotationRequest {
  std::uint16_t positive_class = 1;
  double fraction = 0.10;
  AnnotationModel model = AnnotationModel::uniform;
  std::uint64_t seed = 0;
};

/// Maximal 4-connected regions of one class. Components are ordered by
/// their first pixel in row-major order; pixels within a component are
/// sorted row-major.
struct ComponentDecomposition {
  std::vector<std::vector<PixelCoord>> components;

  std::size_t total_size() const;
};

ComponentDecomposition connected_components(const ClassGrid& gt, std::uint16_t positive_class);

/// round-half-up(fraction * population); throws ConfigError when that is 0
/// or when fraction is outside (0, 1].
std::size_t annotation_quota(double fraction, std::size_t population);

LabelState annotate_uniform(const ClassGrid& gt, const AnnotationRequest& request);

/// Labelled pixels in the order the blob sampler added them.
std::vector<PixelCoord> blob_sequence(const ClassGrid& gt, const AnnotationRequest& request);
LabelState annotate_blob(const ClassGrid& gt, const AnnotationRequest& request);

/// Dispatches on request.model.
LabelState annotate(const ClassGrid& gt, const AnnotationRequest& request);

const char* to_string(AnnotationModel m);
AnnotationModel annotation_model_from_string(const std::string& s);

}  // namespace punch
