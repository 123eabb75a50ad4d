#pragma once

#include <string>
#include <vector>

#include "punch/cube.hpp"

namespace punch {

/// Partition of the scene into labelled positives and the unlabelled rest.
/// Every pixel of the scene is in scope; the unlabelled set is the
/// complement of `positives()`.
class LabelState {
 public:
  LabelState() = default;
  LabelState(int rows, int cols, std::vector<PixelCoord> positives);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<PixelCoord>& positives() const { return positives_; }
  bool is_positive(PixelCoord p) const {
    return mask_[static_cast<std::size_t>(p.row) * cols_ + p.col] != 0;
  }
  bool is_positive(std::size_t index) const { return mask_[index] != 0; }
  std::size_t positive_count() const { return positives_.size(); }
  std::size_t unlabelled_count() const {
    return static_cast<std::size_t>(rows_) * cols_ - positives_.size();
  }
  /// Row-major list of the unlabelled pixels.
  std::vector<PixelCoord> unlabelled() const;

  /// Canonical JSON: {"version":"labels-1","rows":R,"cols":C,"positives":[[r,c],...]}
  /// with positives sorted row-major. CLI and service both use this form.
  std::string to_json() const;
  static LabelState from_json(const std::string& text);

  friend bool operator==(const LabelState& a, const LabelState& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.positives_ == b.positives_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<PixelCoord> positives_;
  std::vector<unsigned char> mask_;
};

}  // namespace punch
