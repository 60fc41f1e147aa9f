#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace necoc {

// Immutable once constructed; labels live in [0, n_classes).
struct Dataset {
  Eigen::MatrixXd features;  // samples x dims
  std::vector<int> labels;
  int n_classes = 0;
  std::string name;

  int sample_count() const { return static_cast<int>(features.rows()); }
  int dim_count() const { return static_cast<int>(features.cols()); }
};

// Throws if the Dataset invariants are violated.
void check_dataset(const Dataset& d);

// MNIST-style IDX pair. Pixels are scaled to [0,1]; images are flattened
// row-major. Magic numbers: 0x00000803 (images), 0x00000801 (labels).
Dataset load_idx(const std::string& image_path, const std::string& label_path);

// CSV with a mandatory header row. The label column may hold arbitrary
// integers; they are remapped to a dense 0-based range. When label_map is
// non-null it receives original -> dense pairs.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 std::map<int, int>* label_map = nullptr);

// Writes a Dataset in the format load_csv reads back (labels already dense).
void write_csv(const Dataset& d, const std::string& path,
               const std::string& label_column = "label");

// Gaussian blobs around seed-deterministic centers with pairwise center
// distance >= 4.
Dataset synth_blobs(int n_classes, int per_class, int dims, double spread,
                    std::uint64_t seed);

// Shuffle then cut: ceil(n * fraction) samples go to dev, the rest to train.
std::pair<Dataset, Dataset> dev_split(const Dataset& d, double fraction,
                                      std::uint64_t seed);

struct StandardizeResult {
  Dataset train;
  std::vector<Dataset> others;
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

// Per-dimension (x - mean) / std with statistics from train only. Dimensions
// with std < 1e-12 are centered but not divided.
StandardizeResult standardize(const Dataset& train,
                              const std::vector<Dataset>& others = {});

}  // namespace necoc
