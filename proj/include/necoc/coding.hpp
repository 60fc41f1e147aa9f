#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace necoc {

// N-ary coding matrix M: n_classes x n_learners, entries in {1..n_meta}.
// Row r is the codeword of class r (0-based classes, 1-based meta labels);
// column c defines the meta-class task of base learner c.
struct CodingMatrix {
  Eigen::MatrixXi entries;
  int n_classes = 0;
  int n_learners = 0;
  int n_meta = 0;
  std::uint64_t seed = 0;
};

// One column viewed as a surjective map original class -> meta-class.
struct MetaPartition {
  std::vector<int> class_to_meta;  // length n_classes, values in {1..n_meta}
  std::vector<int> subset_sizes;   // length n_meta, sums to n_classes

  int n_classes() const { return static_cast<int>(class_to_meta.size()); }
  int n_meta() const { return static_cast<int>(subset_sizes.size()); }
};

struct MatrixMetrics {
  int min_row_distance = 0;
  double mean_row_distance = 0.0;
  double merge_degree = 0.0;
};

struct Violation {
  enum class Kind { range, surjectivity, balance, row_collision };
  Kind kind;
  int row = -1;   // offending row (or first of a colliding pair)
  int row2 = -1;  // second row of a colliding pair
  int col = -1;   // offending column
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Uniformly random balanced partition of n_classes into n_meta subsets:
// shuffle class indices, cut into contiguous blocks. The first
// n_classes % n_meta subsets take the ceiling size.
MetaPartition random_balanced_partition(int n_classes, int n_meta,
                                        std::uint64_t seed);

// Random dense coding matrix. Column c draws its partition from the
// substream derive_seed(seed, attempt, c); if two rows coincide the whole
// matrix is regenerated with the attempt counter bumped, up to 64 attempts,
// after which RowCollision is thrown.
CodingMatrix generate_coding_matrix(int n_classes, int n_learners, int n_meta,
                                    std::uint64_t seed);

int hamming_distance_rows(const CodingMatrix& m, int row_a, int row_b);
int min_row_distance(const CodingMatrix& m);
double mean_row_distance(const CodingMatrix& m);

// (n_classes - n_meta) / n_classes, the fraction of class distinctions
// collapsed inside each column.
double class_merge_degree(int n_classes, int n_meta);

// Guideline range for the learner count:
// [floor(10*log_2.2(n_classes)), ceil(10*log_1.5(n_classes))].
std::pair<int, int> suggested_learner_range(int n_classes);

ValidationReport validate(const CodingMatrix& m);
MatrixMetrics matrix_metrics(const CodingMatrix& m);

MetaPartition column_partition(const CodingMatrix& m, int col);

// CSV layout: "# n_classes=<int>,n_learners=<int>,n_meta=<int>,seed=<uint>"
// then n_classes lines of n_learners comma-separated entries.
void write_matrix(const CodingMatrix& m, std::ostream& out);
void write_matrix_file(const CodingMatrix& m, const std::string& path);
CodingMatrix read_matrix(std::istream& in);
CodingMatrix read_matrix_file(const std::string& path);

}  // namespace necoc
