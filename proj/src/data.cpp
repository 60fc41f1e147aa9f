#include "necoc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "necoc/errors.hpp"
#include "necoc/seeding.hpp"

namespace necoc {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;
constexpr double kStdFloor = 1e-12;

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw TruncatedFile("unexpected end of " + path);
  }
  return (static_cast<std::uint32_t>(b[0]) << 24) |
         (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) |
         static_cast<std::uint32_t>(b[3]);
}

}  // namespace

void check_dataset(const Dataset& d) {
  if (d.features.rows() != static_cast<Eigen::Index>(d.labels.size())) {
    throw ShapeMismatch("dataset '" + d.name + "': " +
                        std::to_string(d.features.rows()) +
                        " feature rows vs " + std::to_string(d.labels.size()) +
                        " labels");
  }
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    if (d.labels[i] < 0 || d.labels[i] >= d.n_classes) {
      throw RangeError("dataset '" + d.name + "': label " +
                       std::to_string(d.labels[i]) + " at sample " +
                       std::to_string(i) + " outside [0, " +
                       std::to_string(d.n_classes) + ")");
    }
  }
  if (!d.features.allFinite()) {
    throw RangeError("dataset '" + d.name + "': non-finite feature value");
  }
}

Dataset load_idx(const std::string& image_path, const std::string& label_path) {
  std::ifstream images(image_path, std::ios::binary);
  if (!images) throw IoError("cannot open " + image_path);
  std::ifstream labels(label_path, std::ios::binary);
  if (!labels) throw IoError("cannot open " + label_path);

  const std::uint32_t image_magic = read_be_u32(images, image_path);
  if (image_magic != kImageMagic) {
    std::ostringstream msg;
    msg << image_path << ": expected image magic 0x" << std::hex
        << std::setw(8) << std::setfill('0') << kImageMagic << ", got 0x"
        << std::setw(8) << image_magic;
    throw BadMagic(msg.str());
  }
  const std::uint32_t label_magic = read_be_u32(labels, label_path);
  if (label_magic != kLabelMagic) {
    std::ostringstream msg;
    msg << label_path << ": expected label magic 0x" << std::hex
        << std::setw(8) << std::setfill('0') << kLabelMagic << ", got 0x"
        << std::setw(8) << label_magic;
    throw BadMagic(msg.str());
  }

  const std::uint32_t n_images = read_be_u32(images, image_path);
  const std::uint32_t rows = read_be_u32(images, image_path);
  const std::uint32_t cols = read_be_u32(images, image_path);
  const std::uint32_t n_labels = read_be_u32(labels, label_path);
  if (n_images != n_labels) {
    throw CountMismatch(std::to_string(n_images) + " images in " + image_path +
                        " vs " + std::to_string(n_labels) + " labels in " +
                        label_path);
  }

  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buffer(pixels);
  Dataset d;
  d.name = image_path;
  d.features.resize(static_cast<Eigen::Index>(n_images),
                    static_cast<Eigen::Index>(pixels));
  d.labels.resize(n_images);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    if (!images.read(reinterpret_cast<char*>(buffer.data()),
                     static_cast<std::streamsize>(pixels))) {
      throw TruncatedFile("unexpected end of " + image_path + " at image " +
                          std::to_string(i));
    }
    for (std::size_t p = 0; p < pixels; ++p) {
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          static_cast<double>(buffer[p]) / 255.0;
    }
  }

  std::vector<unsigned char> raw_labels(n_labels);
  if (n_labels > 0 &&
      !labels.read(reinterpret_cast<char*>(raw_labels.data()),
                   static_cast<std::streamsize>(n_labels))) {
    throw TruncatedFile("unexpected end of " + label_path);
  }
  int max_label = 0;
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    d.labels[i] = static_cast<int>(raw_labels[i]);
    max_label = std::max(max_label, d.labels[i]);
  }
  d.n_classes = max_label + 1;
  check_dataset(d);
  return d;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 std::map<int, int>* label_map) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw EmptyInput(path + " is empty");
  const std::vector<std::string> header = split_csv_line(line);
  int label_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trimmed(header[i]) == label_column) {
      label_idx = static_cast<int>(i);
      break;
    }
  }
  if (label_idx < 0) {
    throw MissingColumn("no column '" + label_column + "' in header of " +
                        path);
  }

  const int n_cols = static_cast<int>(header.size());
  std::vector<std::vector<double>> feature_rows;
  std::vector<int> raw_labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != n_cols) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(n_cols) + " cells, found " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(n_cols - 1));
    for (int c = 0; c < n_cols; ++c) {
      const std::string value = trimmed(cells[static_cast<std::size_t>(c)]);
      if (c == label_idx) {
        try {
          std::size_t used = 0;
          const int v = std::stoi(value, &used);
          if (used != value.size()) throw std::invalid_argument(value);
          raw_labels.push_back(v);
        } catch (const std::exception&) {
          throw ParseError(path + ":" + std::to_string(line_no) +
                           ": label cell '" + value + "' in column '" +
                           trimmed(header[static_cast<std::size_t>(c)]) +
                           "' is not an integer");
        }
      } else {
        try {
          std::size_t used = 0;
          const double v = std::stod(value, &used);
          if (used != value.size()) throw std::invalid_argument(value);
          row.push_back(v);
        } catch (const std::exception&) {
          throw ParseError(path + ":" + std::to_string(line_no) + ": cell '" +
                           value + "' in column '" +
                           trimmed(header[static_cast<std::size_t>(c)]) +
                           "' is not numeric");
        }
      }
    }
    feature_rows.push_back(std::move(row));
  }
  if (feature_rows.empty()) throw EmptyInput(path + " has no data rows");

  std::map<int, int> mapping;
  for (int v : raw_labels) mapping.emplace(v, 0);
  int next = 0;
  for (auto& [raw, dense] : mapping) dense = next++;

  Dataset d;
  d.name = path;
  d.n_classes = next;
  d.labels.reserve(raw_labels.size());
  for (int v : raw_labels) d.labels.push_back(mapping.at(v));
  d.features.resize(static_cast<Eigen::Index>(feature_rows.size()),
                    static_cast<Eigen::Index>(n_cols - 1));
  for (std::size_t i = 0; i < feature_rows.size(); ++i) {
    for (int c = 0; c < n_cols - 1; ++c) {
      d.features(static_cast<Eigen::Index>(i), c) =
          feature_rows[i][static_cast<std::size_t>(c)];
    }
  }
  if (label_map != nullptr) *label_map = mapping;
  check_dataset(d);
  return d;
}

void write_csv(const Dataset& d, const std::string& path,
               const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << label_column;
  for (int c = 0; c < d.dim_count(); ++c) out << ",x" << c;
  out << "\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int i = 0; i < d.sample_count(); ++i) {
    out << d.labels[static_cast<std::size_t>(i)];
    for (int c = 0; c < d.dim_count(); ++c) out << "," << d.features(i, c);
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

namespace {

// Uniform centers in an expanding box, rejecting candidates closer than 4 to
// any accepted center. The box doubles on exhaustion, so termination is
// certain; all draws come from one stream, so the result is seed-determined.
std::vector<Eigen::VectorXd> place_centers(int n_classes, int dims,
                                           RandomStream& rng) {
  const double per_axis =
      std::ceil(std::pow(static_cast<double>(n_classes), 1.0 / dims));
  double half_width = 4.0 * (per_axis + 1.0);
  std::vector<Eigen::VectorXd> centers;
  while (true) {
    centers.clear();
    bool ok = true;
    for (int k = 0; k < n_classes && ok; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
        Eigen::VectorXd cand(dims);
        for (int axis = 0; axis < dims; ++axis) {
          cand(axis) = rng.next_uniform(-half_width, half_width);
        }
        placed = true;
        for (const Eigen::VectorXd& c : centers) {
          if ((cand - c).norm() < 4.0) {
            placed = false;
            break;
          }
        }
        if (placed) centers.push_back(std::move(cand));
      }
      ok = placed;
    }
    if (ok) return centers;
    half_width *= 2.0;
  }
}

}  // namespace

Dataset synth_blobs(int n_classes, int per_class, int dims, double spread,
                    std::uint64_t seed) {
  if (n_classes < 2) throw RangeError("synth_blobs needs n_classes >= 2");
  if (per_class < 1) throw RangeError("synth_blobs needs per_class >= 1");
  if (dims < 2) throw RangeError("synth_blobs needs dims >= 2");
  if (spread < 0.0) throw RangeError("synth_blobs needs spread >= 0");

  RandomStream rng(seed);
  const std::vector<Eigen::VectorXd> centers =
      place_centers(n_classes, dims, rng);

  Dataset d;
  d.name = "blobs(" + std::to_string(n_classes) + "x" +
           std::to_string(per_class) + "," + std::to_string(dims) + "d)";
  d.n_classes = n_classes;
  const int n = n_classes * per_class;
  d.features.resize(n, dims);
  d.labels.resize(static_cast<std::size_t>(n));
  int row = 0;
  for (int k = 0; k < n_classes; ++k) {
    for (int s = 0; s < per_class; ++s, ++row) {
      for (int axis = 0; axis < dims; ++axis) {
        d.features(row, axis) =
            centers[static_cast<std::size_t>(k)](axis) +
            spread * rng.next_gaussian();
      }
      d.labels[static_cast<std::size_t>(row)] = k;
    }
  }
  return d;
}

std::pair<Dataset, Dataset> dev_split(const Dataset& d, double fraction,
                                      std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw RangeError("dev_split fraction must lie in (0, 1), got " +
                     std::to_string(fraction));
  }
  const int n = d.sample_count();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  RandomStream rng(seed);
  rng.shuffle(order);

  const int n_dev = static_cast<int>(std::ceil(n * fraction));
  auto take = [&](int from, int count, const std::string& suffix) {
    Dataset part;
    part.n_classes = d.n_classes;
    part.name = d.name + suffix;
    part.features.resize(count, d.features.cols());
    part.labels.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const int src = order[static_cast<std::size_t>(from + i)];
      part.features.row(i) = d.features.row(src);
      part.labels[static_cast<std::size_t>(i)] =
          d.labels[static_cast<std::size_t>(src)];
    }
    return part;
  };
  return {take(n_dev, n - n_dev, "/train"), take(0, n_dev, "/dev")};
}

StandardizeResult standardize(const Dataset& train,
                              const std::vector<Dataset>& others) {
  if (train.sample_count() == 0) {
    throw EmptyInput("standardize needs a nonempty train set");
  }
  const Eigen::Index dims = train.features.cols();
  StandardizeResult out;
  out.mean = train.features.colwise().mean();
  Eigen::VectorXd var(dims);
  for (Eigen::Index c = 0; c < dims; ++c) {
    var(c) = (train.features.col(c).array() - out.mean(c)).square().mean();
  }
  out.stddev = var.array().sqrt();

  auto apply = [&](const Dataset& d) {
    Dataset scaled = d;
    for (Eigen::Index c = 0; c < dims; ++c) {
      scaled.features.col(c).array() -= out.mean(c);
      if (out.stddev(c) >= kStdFloor) {
        scaled.features.col(c) /= out.stddev(c);
      }
    }
    return scaled;
  };
  out.train = apply(train);
  out.others.reserve(others.size());
  for (const Dataset& d : others) out.others.push_back(apply(d));
  return out;
}

}  // namespace necoc
