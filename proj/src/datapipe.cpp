#include "dnada/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dnada/rng.hpp"

namespace dnada::datapipe {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& cell, std::size_t line_no, const std::string& col) {
  const std::string t = trim(cell);
  if (t.empty())
    throw std::runtime_error("line " + std::to_string(line_no) + ": blank cell in column '" + col + "'");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": non-numeric cell '" + t +
                             "' in column '" + col + "'");
  }
  if (used != t.size())
    throw std::runtime_error("line " + std::to_string(line_no) + ": non-numeric cell '" + t +
                             "' in column '" + col + "'");
  return v;
}

// Linear-interpolation quantile on a sorted vector.
double quantile_sorted(const Vec& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

Vec random_unit(Rng& rng, std::size_t dim) {
  Vec v = rng.gaussian_vec(dim);
  const double n = std::sqrt(squared_norm(v));
  for (auto& x : v) x /= n;
  return v;
}

// Gram-Schmidt a fresh random vector against `basis`; returns a unit vector.
Vec random_unit_orthogonal(Rng& rng, const std::vector<Vec>& basis, std::size_t dim) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vec v = rng.gaussian_vec(dim);
    for (const auto& b : basis) axpy(-dot(v, b), b, v);
    const double n = std::sqrt(squared_norm(v));
    if (n > 1e-8) {
      for (auto& x : v) x /= n;
      return v;
    }
  }
  throw std::runtime_error("synth_domains: dimension too small for requested geometry");
}

}  // namespace

CsvSchema infer_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty file: " + path);
  auto cells = split_line(header);
  if (cells.size() < 2) throw std::runtime_error("header needs a timestamp and at least one channel: " + path);
  CsvSchema schema;
  schema.timestamp_column = trim(cells.front());
  std::size_t last = cells.size();
  if (trim(cells.back()) == "activity") {
    schema.activity_column = "activity";
    --last;
  }
  for (std::size_t i = 1; i < last; ++i) schema.channel_columns.push_back(trim(cells[i]));
  if (schema.channel_columns.empty())
    throw std::runtime_error("header has no channel columns: " + path);
  return schema;
}

std::vector<Row> load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
  const auto header = split_line(line);

  // Resolve schema columns against the header.
  auto find_col = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    throw std::runtime_error("column '" + name + "' not found in " + path);
  };
  const std::size_t ts_col = find_col(schema.timestamp_column);
  std::vector<std::size_t> ch_cols;
  ch_cols.reserve(schema.channel_columns.size());
  for (const auto& c : schema.channel_columns) ch_cols.push_back(find_col(c));
  std::optional<std::size_t> act_col;
  if (schema.activity_column) act_col = find_col(*schema.activity_column);

  const std::size_t expected_cells = header.size();

  std::vector<Row> rows;
  std::size_t line_no = 1;
  double prev_ts = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != expected_cells)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(expected_cells) + " cells, got " +
                               std::to_string(cells.size()));
    Row row;
    row.timestamp = parse_number(cells[ts_col], line_no, schema.timestamp_column);
    if (row.timestamp < prev_ts)
      throw std::runtime_error("line " + std::to_string(line_no) + ": non-monotonic timestamp");
    prev_ts = row.timestamp;
    row.channels.reserve(ch_cols.size());
    for (std::size_t i = 0; i < ch_cols.size(); ++i)
      row.channels.push_back(parse_number(cells[ch_cols[i]], line_no, schema.channel_columns[i]));
    if (act_col)
      row.activity = static_cast<int>(parse_number(cells[*act_col], line_no, *schema.activity_column));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SensorWindow> make_windows(const std::vector<Row>& rows, double window_seconds,
                                       double overlap, double sample_rate_hz,
                                       const std::string& user_id) {
  if (overlap < 0.0 || overlap >= 1.0)
    throw std::invalid_argument("make_windows: overlap must be in [0, 1)");
  if (sample_rate_hz <= 0.0) throw std::invalid_argument("make_windows: sample rate must be positive");
  const std::size_t win_len =
      static_cast<std::size_t>(std::llround(window_seconds * sample_rate_hz));
  if (win_len < 2) throw std::invalid_argument("make_windows: window shorter than 2 samples");
  if (rows.size() < win_len)
    throw std::invalid_argument("make_windows: insufficient rows (" + std::to_string(rows.size()) +
                                " < " + std::to_string(win_len) + ")");
  const std::size_t stride = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(win_len) * (1.0 - overlap))));

  const std::size_t channels = rows.front().channels.size();
  std::vector<SensorWindow> out;
  for (std::size_t start = 0; start + win_len <= rows.size(); start += stride) {
    bool uniform = true;
    const auto label = rows[start].activity;
    for (std::size_t i = 0; i < win_len; ++i) {
      const Row& r = rows[start + i];
      if (r.channels.size() != channels)
        throw std::invalid_argument("make_windows: ragged channel count at row " + std::to_string(start + i));
      if (r.activity != label) {
        uniform = false;
        break;
      }
    }
    if (!uniform) continue;  // drop windows straddling a label change
    SensorWindow w;
    w.samples = Mat(win_len, channels);
    for (std::size_t i = 0; i < win_len; ++i)
      for (std::size_t c = 0; c < channels; ++c) w.samples(i, c) = rows[start + i].channels[c];
    w.sample_rate_hz = sample_rate_hz;
    w.activity_label = label;
    w.user_id = user_id;
    out.push_back(std::move(w));
  }
  return out;
}

FeatureVector extract_features(const SensorWindow& w) {
  const std::size_t n = w.samples.rows;
  const std::size_t channels = w.samples.cols;
  if (n < 2) throw std::invalid_argument("extract_features: window too short");

  FeatureVector fv;
  fv.x0.reserve(channels * kFeaturesPerChannel);
  Vec col(n), sorted(n);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) col[i] = w.samples(i, c);
    sorted = col;
    std::sort(sorted.begin(), sorted.end());

    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(n);

    double var = 0.0, sq = 0.0, mad = 0.0;
    for (double v : col) {
      var += (v - mean) * (v - mean);
      sq += v * v;
      mad += std::abs(v - mean);
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    const double rms = std::sqrt(sq / static_cast<double>(n));
    mad /= static_cast<double>(n);

    const double mn = sorted.front();
    const double mx = sorted.back();
    const double median = quantile_sorted(sorted, 0.5);
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

    fv.x0.push_back(mean);
    fv.x0.push_back(sd);
    fv.x0.push_back(mn);
    fv.x0.push_back(mx);
    fv.x0.push_back(mx - mn);
    fv.x0.push_back(median);
    fv.x0.push_back(rms);
    fv.x0.push_back(mad);
    fv.x0.push_back(iqr);
  }
  for (double v : fv.x0)
    if (!std::isfinite(v)) throw std::runtime_error("extract_features: non-finite feature");
  fv.activity = w.activity_label;
  return fv;
}

std::vector<FeatureVector> cluster_pseudo_labels(const std::vector<FeatureVector>& target,
                                                 std::size_t k, std::uint64_t seed) {
  if (target.empty()) throw std::invalid_argument("cluster_pseudo_labels: empty input");
  if (k == 0 || k > target.size())
    throw std::invalid_argument("cluster_pseudo_labels: k must be in [1, sample count]");
  const std::size_t n = target.size();
  const std::size_t dim = target.front().x0.size();

  Rng rng(mix_seed(seed, 0x6b6d65616e73ULL));

  auto sq_dist = [&](const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = a[i] - b[i];
      s += d * d;
    }
    return s;
  };

  // k-means++ seeding
  std::vector<Vec> centers;
  centers.push_back(target[rng.uniform_below(n)].x0);
  Vec d2(n);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = sq_dist(target[i].x0, centers[0]);
      for (std::size_t c = 1; c < centers.size(); ++c)
        best = std::min(best, sq_dist(target[i].x0, centers[c]));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.uniform_below(n);
    } else {
      const double r = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(target[pick].x0);
  }

  // Lloyd iterations
  std::vector<std::size_t> assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = sq_dist(target[i].x0, centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = sq_dist(target[i].x0, centers[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<Vec> sums(k, Vec(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      axpy(1.0, target[i].x0, sums[assign[i]]);
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // keep the old center for an empty cluster
      for (std::size_t j = 0; j < dim; ++j) centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
    if (!changed && iter > 0) break;
  }

  std::vector<FeatureVector> out = target;
  for (std::size_t i = 0; i < n; ++i)
    out[i].activity = static_cast<int>(assign[i] + k);  // offset keeps ids disjoint from source
  return out;
}

std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>>
split_target(const std::vector<FeatureVector>& target) {
  if (target.size() < 2) throw std::invalid_argument("split_target: need at least 2 samples");
  const std::size_t val_n = (target.size() + 1) / 2;
  std::vector<FeatureVector> val(target.begin(), target.begin() + static_cast<std::ptrdiff_t>(val_n));
  std::vector<FeatureVector> test(target.begin() + static_cast<std::ptrdiff_t>(val_n), target.end());
  return {std::move(val), std::move(test)};
}

std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>>
synth_domains(std::size_t n_per_class, std::size_t classes, std::size_t dim,
              double shift, std::uint64_t seed) {
  if (n_per_class == 0 || classes == 0 || dim == 0)
    throw std::invalid_argument("synth_domains: all arguments must be positive");
  if (dim < 2) throw std::invalid_argument("synth_domains: dim must be >= 2");

  Rng rng(mix_seed(seed, 0x73796e7468ULL));

  // Geometry: the class axis is partially aligned with the translation
  // direction so a nonzero shift moves one class toward the other's side of
  // a source-trained decision boundary, while within-domain structure stays
  // intact. axis_overlap and the center separation set how hard the
  // adaptation task is at shift = 4.
  const double axis_overlap = 0.85;
  const double separation = 7.0;

  const Vec v = random_unit(rng, dim);
  const Vec w = random_unit_orthogonal(rng, {v}, dim);
  Vec axis(dim, 0.0);
  axpy(axis_overlap, v, axis);
  axpy(std::sqrt(1.0 - axis_overlap * axis_overlap), w, axis);

  std::vector<Vec> centers(classes, Vec(dim, 0.0));
  std::vector<Vec> frame = {v, w};
  for (std::size_t c = 0; c < classes; ++c) {
    if (c == 0) {
      axpy(-separation / 2.0, axis, centers[c]);
    } else if (c == 1) {
      axpy(separation / 2.0, axis, centers[c]);
    } else {
      const Vec extra = random_unit_orthogonal(rng, frame, dim);
      frame.push_back(extra);
      axpy(separation / std::sqrt(2.0), extra, centers[c]);
    }
  }

  // Rotation plane and angle; the angle scales with the shift so shift = 0
  // leaves the target cloud untransformed.
  const Vec p = random_unit(rng, dim);
  const Vec q = random_unit_orthogonal(rng, {p}, dim);
  const double theta = 0.04 * shift * (0.75 + 0.5 * rng.uniform01());
  const double ct = std::cos(theta) - 1.0;
  const double st = std::sin(theta);
  auto rotate = [&](const Vec& x) {
    const double xp = dot(x, p);
    const double xq = dot(x, q);
    Vec y = x;
    axpy(ct * xp - st * xq, p, y);
    axpy(ct * xq + st * xp, q, y);
    return y;
  };

  std::vector<FeatureVector> source, target;
  source.reserve(n_per_class * classes);
  target.reserve(n_per_class * classes);
  // Round-robin over classes keeps the chronological halves class-balanced.
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      FeatureVector s;
      s.x0 = rng.gaussian_vec(dim);
      axpy(1.0, centers[c], s.x0);
      s.activity = static_cast<int>(c);
      s.source_activity = static_cast<int>(c);
      s.domain = 0;
      source.push_back(std::move(s));

      FeatureVector t;
      t.x0 = rng.gaussian_vec(dim);
      axpy(1.0, centers[c], t.x0);
      t.x0 = rotate(t.x0);
      axpy(shift, v, t.x0);
      t.activity = static_cast<int>(c);  // ground truth, stripped for adaptation copies
      t.domain = 1;
      target.push_back(std::move(t));
    }
  }
  return {std::move(source), std::move(target)};
}

Normalizer fit_normalizer(const std::vector<const FeatureVector*>& train) {
  if (train.empty()) throw std::invalid_argument("fit_normalizer: empty training set");
  const std::size_t dim = train.front()->x0.size();
  Normalizer nz{Vec(dim, 0.0), Vec(dim, 0.0)};
  for (const auto* f : train) axpy(1.0, f->x0, nz.mean);
  for (auto& m : nz.mean) m /= static_cast<double>(train.size());
  for (const auto* f : train)
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = f->x0[j] - nz.mean[j];
      nz.std[j] += d * d;
    }
  for (auto& s : nz.std) {
    s = std::sqrt(s / static_cast<double>(train.size()));
    if (s < 1e-12) s = 1.0;  // constant dimension: leave it centered
  }
  return nz;
}

void apply_normalizer(const Normalizer& n, std::vector<FeatureVector>& samples) {
  for (auto& f : samples) {
    if (f.x0.size() != n.mean.size())
      throw std::invalid_argument("apply_normalizer: dimension mismatch");
    for (std::size_t j = 0; j < f.x0.size(); ++j) f.x0[j] = (f.x0[j] - n.mean[j]) / n.std[j];
  }
}

DatasetSplit prepare_split(std::vector<FeatureVector> source,
                           std::vector<FeatureVector> target,
                           std::size_t n_source_classes, std::uint64_t seed,
                           Normalizer* fitted) {
  if (source.empty()) throw std::invalid_argument("prepare_split: no source samples");
  auto [val, test] = split_target(target);

  // Normalization statistics come from source + target-train only; the test
  // half never influences them.
  std::vector<const FeatureVector*> train_refs;
  for (const auto& f : source) train_refs.push_back(&f);
  for (const auto& f : val) train_refs.push_back(&f);
  const Normalizer nz = fit_normalizer(train_refs);
  apply_normalizer(nz, source);
  apply_normalizer(nz, val);
  apply_normalizer(nz, test);

  // Adaptation copies of the first half, stripped of labels, then
  // pseudo-labeled by clustering.
  std::vector<FeatureVector> adapt = val;
  for (auto& f : adapt) {
    f.activity.reset();
    f.source_activity.reset();
    f.domain = 1;
  }
  adapt = cluster_pseudo_labels(adapt, n_source_classes, mix_seed(seed, 0x70736575646fULL));

  DatasetSplit split;
  split.train_source = std::move(source);
  split.train_target = std::move(adapt);
  split.val_target = std::move(val);
  split.test_target = std::move(test);
  if (fitted) *fitted = nz;
  return split;
}

}  // namespace dnada::datapipe
