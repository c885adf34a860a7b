#include "gcd/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "gcd/error.hpp"

namespace gcd {

namespace {

static_assert(std::endian::native == std::endian::little,
              "embedding files are little-endian; add byte swapping for this target");

constexpr std::array<char, 4> kMagic = {'G', 'C', 'D', 'E'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kHasLabels = 1u << 0;
constexpr std::uint32_t kHasTruth = 1u << 1;
constexpr std::uint32_t kHasKnownMask = 1u << 2;

class ByteReader {
 public:
  explicit ByteReader(std::string bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T read(const char* what) {
    T value;
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw ParseError(ParseError::Kind::kTruncated, pos_,
                       std::string("truncated file: expected ") + what + " at byte " +
                           std::to_string(pos_));
    }
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::uint64_t pos() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string bytes_;
  std::uint64_t pos_ = 0;
};

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string non_finite_message(Eigen::Index row, Eigen::Index col) {
  return "non-finite value at row " + std::to_string(row) + ", col " + std::to_string(col);
}

EmbeddingDataset load_binary(const std::filesystem::path& path) {
  ByteReader in(read_file(path));
  std::array<char, 4> magic{};
  for (char& c : magic) c = in.read<char>("magic");
  if (magic != kMagic) {
    throw ParseError(ParseError::Kind::kBadHeader, 0, "bad magic bytes at byte 0 (expected GCDE)");
  }
  const auto version = in.read<std::uint32_t>("version");
  if (version != kVersion) {
    throw ParseError(ParseError::Kind::kBadHeader, 4,
                     "unsupported version " + std::to_string(version) + " at byte 4");
  }
  const auto n = in.read<std::uint64_t>("row count");
  const auto d = in.read<std::uint32_t>("dimension");
  const auto flags = in.read<std::uint32_t>("flags");
  if (n < 1 || d < 2) {
    throw ParseError(ParseError::Kind::kBadHeader, 8,
                     "invalid shape N=" + std::to_string(n) + " D=" + std::to_string(d) +
                         " in header at byte 8");
  }
  if ((flags & ~(kHasLabels | kHasTruth | kHasKnownMask)) != 0) {
    throw ParseError(ParseError::Kind::kBadHeader, 20, "unknown flag bits at byte 20");
  }

  std::uint64_t expected = n * d * sizeof(float);
  if (flags & kHasLabels) expected += n * sizeof(std::int32_t);
  if (flags & kHasTruth) expected += n * sizeof(std::int32_t);
  if (flags & kHasKnownMask) expected += n;
  if (in.remaining() != expected) {
    throw ParseError(ParseError::Kind::kDimensionMismatch, in.pos(),
                     "payload of " + std::to_string(in.remaining()) + " bytes after header at byte " +
                         std::to_string(in.pos()) + " does not match N=" + std::to_string(n) +
                         " D=" + std::to_string(d) + " (expected " + std::to_string(expected) + ")");
  }

  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(d);
  EmbeddingDataset ds;
  ds.features.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const std::uint64_t at = in.pos();
      const float v = in.read<float>("feature");
      if (!std::isfinite(v)) {
        throw ParseError(ParseError::Kind::kNonFinite, at,
                         non_finite_message(r, c) + " (byte " + std::to_string(at) + ")");
      }
      ds.features(r, c) = v;
    }
  }
  ds.labels = IndexVector::Constant(rows, kUnlabeled);
  if (flags & kHasLabels) {
    for (Eigen::Index r = 0; r < rows; ++r) ds.labels[r] = in.read<std::int32_t>("label");
  }
  if (flags & kHasTruth) {
    IndexVector truth(rows);
    for (Eigen::Index r = 0; r < rows; ++r) truth[r] = in.read<std::int32_t>("truth");
    ds.eval_truth = std::move(truth);
  }
  if (flags & kHasKnownMask) {
    std::vector<bool> mask(n);
    for (std::uint64_t r = 0; r < n; ++r) {
      const std::uint64_t at = in.pos();
      const auto b = in.read<std::uint8_t>("known mask");
      if (b > 1) {
        throw ParseError(ParseError::Kind::kBadValue, at,
                         "known mask byte must be 0 or 1 at byte " + std::to_string(at));
      }
      mask[r] = b == 1;
    }
    ds.known_mask = std::move(mask);
  }
  try {
    ds.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(ParseError::Kind::kBadValue, in.pos(), e.what());
  }
  return ds;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  std::istringstream ss(text);
  ss >> out;
  return !ss.fail() && ss.eof();
}

EmbeddingDataset load_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::uint64_t line_no = 1;
  if (!std::getline(in, line)) {
    throw ParseError(ParseError::Kind::kBadHeader, 1, "empty CSV file: missing header at line 1");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "label" || header[1] != "truth" || header[2] != "known") {
    throw ParseError(ParseError::Kind::kBadHeader, 1,
                     "malformed header at line 1: expected label,truth,known,f0..");
  }
  const std::size_t d = header.size() - 3;
  for (std::size_t c = 0; c < d; ++c) {
    if (header[3 + c] != "f" + std::to_string(c)) {
      throw ParseError(ParseError::Kind::kBadHeader, 1,
                       "malformed header at line 1: column " + std::to_string(3 + c) +
                           " should be f" + std::to_string(c));
    }
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<std::optional<int>> truth;
  std::vector<std::optional<bool>> known;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(ParseError::Kind::kDimensionMismatch, line_no,
                       "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(header.size()));
    }
    auto bad = [&](const std::string& what) {
      return ParseError(ParseError::Kind::kBadValue, line_no,
                        "bad " + what + " at line " + std::to_string(line_no));
    };
    int label = kUnlabeled;
    if (!cells[0].empty() && !parse_number(cells[0], label)) throw bad("label");
    labels.push_back(label);
    if (cells[1].empty()) {
      truth.emplace_back();
    } else {
      int t = 0;
      if (!parse_number(cells[1], t)) throw bad("truth");
      truth.emplace_back(t);
    }
    if (cells[2].empty()) {
      known.emplace_back();
    } else if (cells[2] == "0" || cells[2] == "1") {
      known.emplace_back(cells[2] == "1");
    } else {
      throw bad("known flag");
    }
    std::vector<double> row(d);
    for (std::size_t c = 0; c < d; ++c) {
      double v = 0.0;
      const std::string& cell = cells[3 + c];
      if (cell == "nan" || cell == "-nan" || cell == "inf" || cell == "-inf" ||
          cell == "NaN" || cell == "Inf" || cell == "-Inf") {
        v = std::numeric_limits<double>::quiet_NaN();
      } else if (!parse_number(cell, v)) {
        throw bad("feature value");
      }
      // Stored precision is float32 in both formats.
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) {
        throw ParseError(ParseError::Kind::kNonFinite, line_no,
                         non_finite_message(static_cast<Eigen::Index>(rows.size()),
                                            static_cast<Eigen::Index>(c)) +
                             " (line " + std::to_string(line_no) + ")");
      }
      row[c] = f;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ParseError(ParseError::Kind::kBadHeader, line_no, "CSV file has no data rows");
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  EmbeddingDataset ds;
  ds.features.resize(n, static_cast<Eigen::Index>(d));
  ds.labels.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) ds.features(r, static_cast<Eigen::Index>(c)) = rows[r][c];
    ds.labels[r] = labels[r];
  }
  const auto present = [](const auto& column) {
    return std::count_if(column.begin(), column.end(), [](const auto& v) { return v.has_value(); });
  };
  const auto truth_count = present(truth);
  if (truth_count != 0 && truth_count != n) {
    throw ParseError(ParseError::Kind::kBadValue, 0, "truth column is only partially filled");
  }
  if (truth_count == n) {
    IndexVector t(n);
    for (Eigen::Index r = 0; r < n; ++r) t[r] = *truth[r];
    ds.eval_truth = std::move(t);
  }
  const auto known_count = present(known);
  if (known_count != 0 && known_count != n) {
    throw ParseError(ParseError::Kind::kBadValue, 0, "known column is only partially filled");
  }
  if (known_count == n) {
    std::vector<bool> mask(n);
    for (Eigen::Index r = 0; r < n; ++r) mask[r] = *known[r];
    ds.known_mask = std::move(mask);
  }
  try {
    ds.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(ParseError::Kind::kBadValue, 0, e.what());
  }
  return ds;
}

void save_binary(const EmbeddingDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  std::uint32_t flags = kHasLabels;
  if (ds.eval_truth) flags |= kHasTruth;
  if (ds.known_mask) flags |= kHasKnownMask;
  out.write(kMagic.data(), kMagic.size());
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(ds.size()));
  write_pod(out, static_cast<std::uint32_t>(ds.dim()));
  write_pod(out, flags);
  for (Eigen::Index r = 0; r < ds.size(); ++r) {
    for (Eigen::Index c = 0; c < ds.dim(); ++c) write_pod(out, static_cast<float>(ds.features(r, c)));
  }
  for (Eigen::Index r = 0; r < ds.size(); ++r) write_pod(out, static_cast<std::int32_t>(ds.labels[r]));
  if (ds.eval_truth) {
    for (Eigen::Index r = 0; r < ds.size(); ++r) {
      write_pod(out, static_cast<std::int32_t>((*ds.eval_truth)[r]));
    }
  }
  if (ds.known_mask) {
    for (bool b : *ds.known_mask) write_pod(out, static_cast<std::uint8_t>(b ? 1 : 0));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void save_csv(const EmbeddingDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "label,truth,known";
  for (Eigen::Index c = 0; c < ds.dim(); ++c) out << ",f" << c;
  out << '\n';
  out << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (Eigen::Index r = 0; r < ds.size(); ++r) {
    if (ds.labels[r] != kUnlabeled) out << ds.labels[r];
    out << ',';
    if (ds.eval_truth) out << (*ds.eval_truth)[r];
    out << ',';
    if (ds.known_mask) out << ((*ds.known_mask)[r] ? '1' : '0');
    for (Eigen::Index c = 0; c < ds.dim(); ++c) out << ',' << static_cast<float>(ds.features(r, c));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

Eigen::Index EmbeddingDataset::num_labeled() const {
  return (labels.array() != kUnlabeled).count();
}

void EmbeddingDataset::validate() const {
  const Eigen::Index n = size();
  if (n < 1 || dim() < 2) throw InvalidArgument("dataset needs N >= 1 and D >= 2");
  if (labels.size() != n) throw InvalidArgument("labels length does not match N");
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < dim(); ++c) {
      if (!std::isfinite(features(r, c))) throw InvalidArgument(non_finite_message(r, c));
    }
    if (labels[r] < kUnlabeled) {
      throw InvalidArgument("negative label other than -1 at row " + std::to_string(r));
    }
  }
  if (eval_truth) {
    if (eval_truth->size() != n) throw InvalidArgument("eval_truth length does not match N");
    for (Eigen::Index r = 0; r < n; ++r) {
      if ((*eval_truth)[r] < 0) throw InvalidArgument("negative truth at row " + std::to_string(r));
      if (labels[r] != kUnlabeled && labels[r] != (*eval_truth)[r]) {
        throw InvalidArgument("label disagrees with eval_truth at row " + std::to_string(r));
      }
    }
  }
  if (known_mask) {
    if (static_cast<Eigen::Index>(known_mask->size()) != n) {
      throw InvalidArgument("known_mask length does not match N");
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      if (labels[r] != kUnlabeled && !(*known_mask)[r]) {
        throw InvalidArgument("labeled row " + std::to_string(r) + " is marked novel");
      }
    }
  }
}

FileFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FileFormat::kCsv : FileFormat::kBinary;
}

EmbeddingDataset load_embeddings(const std::filesystem::path& path, FileFormat format) {
  return format == FileFormat::kBinary ? load_binary(path) : load_csv(path);
}

void save_embeddings(const EmbeddingDataset& dataset, const std::filesystem::path& path,
                     FileFormat format) {
  dataset.validate();
  if (format == FileFormat::kBinary) {
    save_binary(dataset, path);
  } else {
    save_csv(dataset, path);
  }
}

EmbeddingDataset make_split(const EmbeddingDataset& dataset, const SplitSpec& spec) {
  if (!dataset.eval_truth) throw InvalidArgument("make_split needs eval_truth on every row");
  if (!(spec.known_class_fraction > 0.0 && spec.known_class_fraction <= 1.0) ||
      !(spec.labeled_instance_fraction > 0.0 && spec.labeled_instance_fraction <= 1.0)) {
    throw InvalidArgument("split fractions must lie in (0, 1]");
  }
  const IndexVector& truth = *dataset.eval_truth;
  const std::set<int> class_set(truth.data(), truth.data() + truth.size());
  if (class_set.size() < 2) throw InvalidArgument("make_split needs at least 2 classes");

  std::mt19937_64 rng(spec.seed);
  std::vector<int> classes(class_set.begin(), class_set.end());
  std::shuffle(classes.begin(), classes.end(), rng);
  const auto num_known = static_cast<std::size_t>(
      std::ceil(spec.known_class_fraction * static_cast<double>(classes.size()) - 1e-9));
  classes.resize(num_known);
  std::sort(classes.begin(), classes.end());
  const std::set<int> known(classes.begin(), classes.end());

  EmbeddingDataset out = dataset;
  out.labels = IndexVector::Constant(dataset.size(), kUnlabeled);
  std::vector<bool> mask(dataset.size());
  for (Eigen::Index r = 0; r < dataset.size(); ++r) mask[r] = known.count(truth[r]) > 0;
  out.known_mask = std::move(mask);

  for (int cls : classes) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index r = 0; r < dataset.size(); ++r) {
      if (truth[r] == cls) members.push_back(r);
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::ceil(spec.labeled_instance_fraction * static_cast<double>(members.size()) - 1e-9));
    for (std::size_t i = 0; i < take; ++i) out.labels[members[i]] = cls;
  }
  return out;
}

EmbeddingDataset generate_synthetic(const SynthSpec& spec) {
  if (spec.num_classes < 2 || spec.points_per_class < 2 || spec.dim < 2) {
    throw InvalidArgument("synthetic spec needs >= 2 classes, >= 2 points per class, dim >= 2");
  }
  if (!(spec.center_separation > 0.0) || !(spec.cluster_stddev >= 0.0)) {
    throw InvalidArgument("center_separation must be positive and cluster_stddev nonnegative");
  }
  if (spec.dim < spec.num_classes) {
    throw InvalidArgument("dim " + std::to_string(spec.dim) + " is too small to place " +
                          std::to_string(spec.num_classes) +
                          " mutually orthogonal centers at the requested separation");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // A seeded random orthonormal frame keeps class structure off the
  // coordinate axes.
  Matrix gaussian(spec.dim, spec.num_classes);
  for (Eigen::Index c = 0; c < gaussian.cols(); ++c) {
    for (Eigen::Index r = 0; r < gaussian.rows(); ++r) gaussian(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  const Matrix frame = qr.householderQ() * Matrix::Identity(spec.dim, spec.num_classes);
  const Matrix centers = (spec.center_separation / std::sqrt(2.0)) * frame.transpose();

  const Eigen::Index n = static_cast<Eigen::Index>(spec.num_classes) * spec.points_per_class;
  EmbeddingDataset ds;
  ds.features.resize(n, spec.dim);
  ds.labels = IndexVector::Constant(n, kUnlabeled);
  IndexVector truth(n);
  Eigen::Index row = 0;
  for (int k = 0; k < spec.num_classes; ++k) {
    for (int p = 0; p < spec.points_per_class; ++p, ++row) {
      for (Eigen::Index c = 0; c < spec.dim; ++c) {
        ds.features(row, c) = centers(k, c) + spec.cluster_stddev * normal(rng);
      }
      truth[row] = k;
    }
  }
  ds.eval_truth = std::move(truth);
  return ds;
}

}  // namespace gcd
