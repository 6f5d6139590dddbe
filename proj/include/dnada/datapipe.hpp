// Data pipeline: CSV ingestion, sliding-window segmentation, statistical
// feature extraction, pseudo-labeling of the unlabeled target user, and
// train/validation/test assembly.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dnada/tensor.hpp"

namespace dnada::datapipe {

inline constexpr int kFeaturesPerChannel = 9;

// One timestamped sensor reading across all channels.
struct Row {
  double timestamp = 0.0;
  Vec channels;
  std::optional<int> activity;
};

// Column layout of an input CSV. Channel columns are resolved by header name.
struct CsvSchema {
  std::string timestamp_column = "timestamp";
  std::vector<std::string> channel_columns;
  std::optional<std::string> activity_column;  // present when the file is labeled
};

struct SensorWindow {
  // rows = time steps, cols = channels
  Mat samples;
  double sample_rate_hz = 0.0;
  std::optional<int> activity_label;
  std::string user_id;
};

struct FeatureVector {
  Vec x0;
  std::optional<int> activity;          // c_a; pseudo-label for adapted target samples
  int domain = 0;                       // c_u: 0 = source, 1 = target
  std::optional<int> source_activity;   // c_as; set on source samples only
};

struct DatasetSplit {
  std::vector<FeatureVector> train_source;
  std::vector<FeatureVector> train_target;  // unlabeled copies of the first target half, pseudo-labeled
  std::vector<FeatureVector> val_target;    // chronological first half, true labels
  std::vector<FeatureVector> test_target;   // chronological second half, held out
};

// Per-dimension z-normalization fitted on training data only.
struct Normalizer {
  Vec mean;
  Vec std;
};

// Reads the header line of `path` and builds a schema: first column is the
// timestamp, a trailing "activity" column is the label, everything between
// is a channel.
CsvSchema infer_schema(const std::string& path);

// Emits rows in timestamp order. Throws on a missing file, a malformed or
// blank cell (the message names the line), a channel-count mismatch against
// the schema, and timestamps that go backwards.
std::vector<Row> load_csv(const std::string& path, const CsvSchema& schema);

// Fixed-length sliding windows. Windows that straddle an activity-label
// change are dropped so every window carries a single label.
std::vector<SensorWindow> make_windows(const std::vector<Row>& rows,
                                       double window_seconds,
                                       double overlap,
                                       double sample_rate_hz,
                                       const std::string& user_id = "");

// 9 statistics per channel, fixed order: mean, std, min, max, range,
// median, rms, mean absolute deviation, interquartile range.
FeatureVector extract_features(const SensorWindow& w);

// k-means (k-means++ seeding) over unlabeled target features. Cluster ids
// are offset by k so pseudo-labels never collide with source label ids
// (k equals the number of source classes in this pipeline).
std::vector<FeatureVector> cluster_pseudo_labels(const std::vector<FeatureVector>& target,
                                                 std::size_t k, std::uint64_t seed);

// validation = first ceil(n/2) samples, test = the rest, order preserved.
std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>>
split_target(const std::vector<FeatureVector>& target);

// Offline two-domain fixture: unit-variance Gaussian classes, with the
// target cloud translated by `shift` along a random unit vector and
// rotated by a small random rotation whose angle scales with `shift`
// (shift (0 is the identity transform). Deterministic given seed.
std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>>
synth_domains(std::size_t n_per_class, std::size_t classes, std::size_t dim,
              double shift, std::uint64_t seed);

Normalizer fit_normalizer(const std::vector<const FeatureVector*>& train);
void apply_normalizer(const Normalizer& n, std::vector<FeatureVector>& samples);

// Full assembly used by training: chronological target split, z-normalization
// fitted on source + target-train only, pseudo-labels on the adaptation copies.
DatasetSplit prepare_split(std::vector<FeatureVector> source,
                           std::vector<FeatureVector> target,
                           std::size_t n_source_classes, std::uint64_t seed,
                           Normalizer* fitted = nullptr);

}  // namespace dnada::datapipe
