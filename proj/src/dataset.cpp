#include "tvising/dataset.hpp"

#include "tvising/errors.hpp"

#include <string>

namespace tvising {

int SpinDataset::total_observations() const {
  int total = 0;
  for (const auto& b : blocks) total += static_cast<int>(b.rows());
  return total;
}

void SpinDataset::validate() const {
  if (p < 2) throw ValidationError("dataset requires p >= 2");
  if (blocks.empty()) throw ValidationError("dataset has no timestamps");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const std::string where = "timestamp " + std::to_string(i + 1);
    if (b.rows() < 1) throw ValidationError(where + " has no observations");
    if (b.cols() != p) throw ValidationError(where + " has width " + std::to_string(b.cols()) +
                                             ", expected " + std::to_string(p));
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      for (Eigen::Index c = 0; c < b.cols(); ++c)
        if (b(r, c) != 1.0 && b(r, c) != -1.0)
          throw ValidationError(where + ", replicate " + std::to_string(r + 1) + ", node " +
                                std::to_string(c + 1) + ": entry is not +1 or -1");
  }
}

}  // namespace tvising
