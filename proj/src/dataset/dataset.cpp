#include "aesthetics/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "aesthetics/csv.hpp"
#include "aesthetics/error.hpp"
#include "aesthetics/util.hpp"

namespace aesthetics::dataset {

namespace {

constexpr std::string_view kManifestHeader = "photo_id,n_views,upload_date,image_path";
constexpr std::string_view kLabeledHeader = "photo_id,n_views,upload_date,image_path,score,label";

using csv::split_fields;
using csv::split_lines;
using csv::format_double;

PhotoRecord parse_record_fields(const std::vector<std::string_view>& fields, std::size_t line) {
  PhotoRecord rec;
  if (fields[0].empty()) throw ParseError("empty photo_id", line);
  rec.photo_id = std::string(fields[0]);

  std::int64_t views = 0;
  const auto* first = fields[1].data();
  const auto* last = first + fields[1].size();
  auto [ptr, ec] = std::from_chars(first, last, views);
  if (ec != std::errc() || ptr != last || fields[1].empty()) {
    throw ParseError("n_views is not an integer: '" + std::string(fields[1]) + "'", line);
  }
  if (views < 0) throw ParseError("n_views is negative", line);
  rec.n_views = views;

  try {
    rec.upload_date = parse_date(fields[2]);
  } catch (const DomainError& e) {
    throw ParseError(e.what(), line);
  }
  if (fields[3].empty()) throw ParseError("empty image_path", line);
  rec.image_path = std::string(fields[3]);
  return rec;
}

void check_unique(const std::vector<std::string>& ids) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw ValidationError("duplicate photo_id '" + id + "'");
  }
}

bool score_order(const ScoredPhoto& a, const ScoredPhoto& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.record.photo_id < b.record.photo_id;
}

}  // namespace

double compute_score(std::int64_t n_views, std::int64_t n_days) {
  if (n_views < 0) throw DomainError("n_views must be non-negative");
  if (n_days < 0) throw DomainError("n_days must be non-negative");
  return std::log2((static_cast<double>(n_views) + 1.0) / (static_cast<double>(n_days) + 1.0));
}

std::int64_t days_since_upload(Date upload_date, Date reference_date) {
  if (!upload_date.ok() || !reference_date.ok()) throw DomainError("invalid calendar date");
  const auto diff = std::chrono::sys_days{reference_date} - std::chrono::sys_days{upload_date};
  if (diff.count() < 0) {
    throw DomainError("reference date " + format_date(reference_date) + " precedes upload date " +
                      format_date(upload_date));
  }
  return diff.count();
}

Date parse_date(std::string_view text) {
  auto bad = [&] { return DomainError("malformed date '" + std::string(text) + "', expected YYYY-MM-DD"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  auto number = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    const auto* first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, v);
    if (ec != std::errc() || ptr != first + len) throw bad();
    return v;
  };
  const Date date{std::chrono::year{number(0, 4)}, std::chrono::month{static_cast<unsigned>(number(5, 2))},
                  std::chrono::day{static_cast<unsigned>(number(8, 2))}};
  if (!date.ok()) throw bad();
  return date;
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::vector<PhotoRecord> parse_manifest_text(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front().second != kManifestHeader) {
    throw ParseError("expected header '" + std::string(kManifestHeader) + "'", 1);
  }
  std::vector<PhotoRecord> records;
  std::vector<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [number, line] = lines[i];
    const auto fields = split_fields(line);
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), number);
    }
    records.push_back(parse_record_fields(fields, number));
    ids.push_back(records.back().photo_id);
  }
  check_unique(ids);
  return records;
}

std::vector<PhotoRecord> parse_manifest(const std::filesystem::path& path) {
  return parse_manifest_text(util::read_file(path));
}

std::string format_manifest(const std::vector<PhotoRecord>& records) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.photo_id + ',' + std::to_string(r.n_views) + ',' + format_date(r.upload_date) + ',' + r.image_path +
           '\n';
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<PhotoRecord>& records) {
  util::write_file(path, format_manifest(records));
}

std::vector<LabeledRow> parse_labeled_manifest_text(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front().second != kLabeledHeader) {
    throw ParseError("expected header '" + std::string(kLabeledHeader) + "'", 1);
  }
  std::vector<LabeledRow> rows;
  std::vector<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [number, line] = lines[i];
    const auto fields = split_fields(line);
    if (fields.size() != 6) {
      throw ParseError("expected 6 fields, got " + std::to_string(fields.size()), number);
    }
    LabeledRow row;
    row.record = parse_record_fields(fields, number);
    const auto* first = fields[4].data();
    const auto* last = first + fields[4].size();
    auto [ptr, ec] = std::from_chars(first, last, row.score);
    if (ec != std::errc() || ptr != last || fields[4].empty() || !std::isfinite(row.score)) {
      throw ParseError("score is not a finite number: '" + std::string(fields[4]) + "'", number);
    }
    if (fields[5] == "0") {
      row.label = 0;
    } else if (fields[5] == "1") {
      row.label = 1;
    } else {
      throw ParseError("label must be 0 or 1", number);
    }
    ids.push_back(row.record.photo_id);
    rows.push_back(std::move(row));
  }
  check_unique(ids);
  return rows;
}

std::vector<LabeledRow> parse_labeled_manifest(const std::filesystem::path& path) {
  return parse_labeled_manifest_text(util::read_file(path));
}

std::vector<LabeledRow> to_rows(const LabeledDataset& labeled) {
  std::vector<LabeledRow> rows;
  rows.reserve(labeled.size());
  for (const auto& p : labeled.positives) rows.push_back({p.record, p.score, 1});
  for (const auto& n : labeled.negatives) rows.push_back({n.record, n.score, 0});
  return rows;
}

LabeledDataset from_rows(const std::vector<LabeledRow>& rows, SplitTag tag) {
  LabeledDataset out;
  out.split_tag = tag;
  for (const auto& row : rows) {
    ScoredPhoto p{row.record, 0, row.score};
    (row.label == 1 ? out.positives : out.negatives).push_back(std::move(p));
  }
  return out;
}

std::string format_labeled_manifest(const std::vector<LabeledRow>& rows) {
  std::string out(kLabeledHeader);
  out += '\n';
  for (const auto& row : rows) {
    const auto& r = row.record;
    out += r.photo_id + ',' + std::to_string(r.n_views) + ',' + format_date(r.upload_date) + ',' + r.image_path +
           ',' + format_double(row.score) + ',' + std::to_string(row.label) + '\n';
  }
  return out;
}

void write_labeled_manifest(const std::filesystem::path& path, const std::vector<LabeledRow>& rows) {
  util::write_file(path, format_labeled_manifest(rows));
}

std::vector<ScoredPhoto> score_records(const std::vector<PhotoRecord>& records, Date reference_date) {
  std::vector<ScoredPhoto> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto days = days_since_upload(r.upload_date, reference_date);
    out.push_back({r, days, compute_score(r.n_views, days)});
  }
  return out;
}

LabeledDataset label_by_percentile(std::vector<ScoredPhoto> photos, double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.5)) throw DomainError("fraction must lie in (0, 0.5]");
  if (photos.empty()) throw DomainError("cannot label an empty photo list");

  std::sort(photos.begin(), photos.end(), score_order);
  const auto n = photos.size();
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));

  LabeledDataset out;
  out.positives.assign(photos.begin(), photos.begin() + static_cast<std::ptrdiff_t>(k));
  // Negatives are kept in ascending score order: the worst photo comes first.
  for (std::size_t i = 0; i < k; ++i) out.negatives.push_back(photos[n - 1 - i]);
  out.discarded_count = n - 2 * k;
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& labeled, double train_fraction,
                                                           std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("train_fraction must lie in (0, 1)");
  const auto total = labeled.size();
  if (total == 0) throw DomainError("cannot split an empty pool");

  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(total)));
  const auto n_pos = labeled.positives.size();
  const auto n_neg = labeled.negatives.size();
  std::size_t pos_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n_pos)));
  std::size_t neg_train = n_train - pos_train;
  if (neg_train > n_neg) {
    pos_train += neg_train - n_neg;
    neg_train = n_neg;
  }

  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    std::vector<bool> chosen(n, false);
    for (std::size_t i = 0; i < k; ++i) chosen[idx[i]] = true;
    return chosen;
  };

  const auto pos_mask = pick(n_pos, pos_train);
  const auto neg_mask = pick(n_neg, neg_train);

  LabeledDataset train;
  LabeledDataset test;
  train.split_tag = SplitTag::kTrain;
  test.split_tag = SplitTag::kTest;
  for (std::size_t i = 0; i < n_pos; ++i) {
    (pos_mask[i] ? train : test).positives.push_back(labeled.positives[i]);
  }
  for (std::size_t i = 0; i < n_neg; ++i) {
    (neg_mask[i] ? train : test).negatives.push_back(labeled.negatives[i]);
  }
  return {std::move(train), std::move(test)};
}

std::vector<HistogramBin> score_histogram(const std::vector<ScoredPhoto>& photos, std::size_t n_bins) {
  if (n_bins < 1) throw DomainError("n_bins must be at least 1");
  if (photos.empty()) throw DomainError("cannot histogram an empty photo list");

  const auto [lo_it, hi_it] = std::minmax_element(
      photos.begin(), photos.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  const double lo = lo_it->score;
  const double hi = hi_it->score;
  const double width = (hi - lo) / static_cast<double>(n_bins);

  std::vector<HistogramBin> bins(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    bins[i].low = lo + width * static_cast<double>(i);
    bins[i].high = (i + 1 == n_bins) ? hi : lo + width * static_cast<double>(i + 1);
  }
  for (const auto& p : photos) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>(std::floor((p.score - lo) / width));
      b = std::min(b, n_bins - 1);
    }
    ++bins[b].count;
  }
  return bins;
}

}  // namespace aesthetics::dataset
