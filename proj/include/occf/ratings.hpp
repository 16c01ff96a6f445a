#pragma once

#include <cstdint>
#include <vector>

#include "occf/grid.hpp"

namespace occf {

struct RatingStats {
  double positive_fraction = 0.0;
  double negative_fraction = 0.0;
  bool operator==(const RatingStats&) const = default;
};

/// Signed user-item matrix over {-1, 0, +1}. Rows and columns keep the
/// identifiers of the source corpus, in selection order.
struct RatingsMatrix {
  Grid<std::int8_t> entries;
  std::vector<std::int64_t> row_ids;
  std::vector<std::int64_t> col_ids;
  RatingStats stats;

  std::size_t n_users() const noexcept { return entries.rows(); }
  std::size_t n_items() const noexcept { return entries.cols(); }
};

RatingStats compute_stats(const Grid<std::int8_t>& entries);

}  // namespace occf
