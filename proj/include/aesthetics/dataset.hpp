#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aesthetics::dataset {

using Date = std::chrono::year_month_day;

struct PhotoRecord {
  std::string photo_id;
  std::int64_t n_views = 0;
  Date upload_date{};
  std::string image_path;

  bool operator==(const PhotoRecord&) const = default;
};

struct ScoredPhoto {
  PhotoRecord record;
  std::int64_t n_days = 0;
  double score = 0.0;
};

enum class SplitTag { kPool, kTrain, kTest };

struct LabeledDataset {
  std::vector<ScoredPhoto> positives;
  std::vector<ScoredPhoto> negatives;
  std::size_t discarded_count = 0;
  SplitTag split_tag = SplitTag::kPool;

  std::size_t size() const { return positives.size() + negatives.size(); }
};

// One row of a labeled manifest. n_days is not persisted, so rows read back
// from disk carry the stored score rather than a ScoredPhoto.
struct LabeledRow {
  PhotoRecord record;
  double score = 0.0;
  int label = 0;
};

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
};

// log2((n_views + 1) / (n_days + 1)): views per day with +1 smoothing on
// both counts.
double compute_score(std::int64_t n_views, std::int64_t n_days);

std::int64_t days_since_upload(Date upload_date, Date reference_date);

// Strict YYYY-MM-DD.
Date parse_date(std::string_view text);
std::string format_date(Date date);

std::vector<PhotoRecord> parse_manifest(const std::filesystem::path& path);
std::vector<PhotoRecord> parse_manifest_text(std::string_view text);
std::string format_manifest(const std::vector<PhotoRecord>& records);
void write_manifest(const std::filesystem::path& path, const std::vector<PhotoRecord>& records);

std::vector<LabeledRow> parse_labeled_manifest(const std::filesystem::path& path);
std::vector<LabeledRow> parse_labeled_manifest_text(std::string_view text);
std::vector<LabeledRow> to_rows(const LabeledDataset& labeled);
std::string format_labeled_manifest(const std::vector<LabeledRow>& rows);
void write_labeled_manifest(const std::filesystem::path& path, const std::vector<LabeledRow>& rows);

// Rebuilds a LabeledDataset from stored rows (n_days recomputed is not possible,
// so it is left at 0).
LabeledDataset from_rows(const std::vector<LabeledRow>& rows, SplitTag tag);

std::vector<ScoredPhoto> score_records(const std::vector<PhotoRecord>& records, Date reference_date);

// Sorts by (score desc, photo_id asc), labels the first floor(fraction*N) as
// positive and the last floor(fraction*N) as negative.
LabeledDataset label_by_percentile(std::vector<ScoredPhoto> photos, double fraction);

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& labeled, double train_fraction,
                                                           std::uint64_t seed);

std::vector<HistogramBin> score_histogram(const std::vector<ScoredPhoto>& photos, std::size_t n_bins);

inline constexpr double kDefaultLabelFraction = 0.2;
// 513382 / (513382 + 85562)
inline constexpr double kDefaultTrainFraction = 0.8572;

}  // namespace aesthetics::dataset
