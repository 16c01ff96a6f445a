#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "occf/ratings.hpp"

namespace occf {

struct RawRating {
  std::int64_t user = 0;
  std::int64_t item = 0;
  double rating = 0;
  std::optional<std::int64_t> timestamp;
};

struct RawRatings {
  std::vector<RawRating> triples;  // one per (user, item), in first-seen order
  std::size_t rows_read = 0;
  std::size_t duplicates_resolved = 0;
};

enum class RatingsFormat {
  double_colon,  // UserID::MovieID::Rating::Timestamp
  csv,           // comma-delimited with a header line
  detect,        // `::` if the first line contains it, else csv
};

RatingsFormat parse_ratings_format(const std::string& text);

/// Reads a ratings file. Duplicate (user, item) pairs keep the rating with
/// the latest timestamp, or the last one in the file when timestamps tie or
/// are missing.
RawRatings parse_ratings(const std::filesystem::path& path,
                         RatingsFormat format = RatingsFormat::detect);
RawRatings parse_ratings_text(const std::string& text, RatingsFormat format);

struct SignedRating {
  std::int64_t user = 0;
  std::int64_t item = 0;
  std::int8_t value = 0;  // +1 or -1
};

/// How ratings between whole stars are treated.
enum class HalfStars {
  reject,     // only {1, 2, 3, 4, 5} accepted
  threshold,  // any value in [0.5, 5] on the half-star grid; >= 4 is +1, else -1
};

HalfStars parse_half_stars(const std::string& text);

/// Ratings >= 4 become +1, ratings <= 3 become -1. Values outside the
/// accepted set throw ParameterError naming the value.
int binarize_rating(double rating, HalfStars policy = HalfStars::reject);
std::vector<SignedRating> binarize(const RawRatings& raw, HalfStars policy = HalfStars::reject);

enum class SelectionMode { debiased, most_rated };

struct SelectionConfig {
  std::size_t n_users_out = 1000;
  std::size_t n_items_out = 500;
  std::size_t min_item_count = 1;
  double bias_tolerance = 0.1;  // |pos - neg| / rated
  SelectionMode mode = SelectionMode::debiased;
};

SelectionMode parse_selection_mode(const std::string& text);
const char* to_string(SelectionMode mode) noexcept;

/// Keeps items with at least min_item_count ratings whose relative bias is
/// within tolerance (debiased mode only), takes the n_items_out most rated
/// survivors, then the n_users_out users with the most ratings on those
/// items. Ties go to the smaller id.
RatingsMatrix select_submatrix(const std::vector<SignedRating>& ratings,
                               const SelectionConfig& cfg);

/// Plain-text grid: one row per user, space-separated tokens in {-1,0,1}.
std::string matrix_grid_text(const RatingsMatrix& m);
void export_matrix_image_data(const RatingsMatrix& m, const std::filesystem::path& path);
RatingsMatrix import_matrix_grid(const std::filesystem::path& path);

/// Grid file plus `<path>.meta` sidecar with ids, stats and the selection config.
void write_corpus(const RatingsMatrix& m, const SelectionConfig& cfg,
                  const std::filesystem::path& path);
/// Reads a grid and, when present, the sidecar ids.
RatingsMatrix load_corpus(const std::filesystem::path& path);

}  // namespace occf
