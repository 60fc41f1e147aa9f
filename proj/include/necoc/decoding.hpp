#pragma once

#include <vector>

#include "necoc/coding.hpp"

namespace necoc {

// Concatenated base-learner outputs for one sample, 1-based meta codes.
using PredictionVector = std::vector<int>;

struct DecodeResult {
  int class_index = 0;  // smallest index among minimum-distance rows
  int distance = 0;
  int tie_count = 1;  // number of rows attaining the minimum

  bool operator==(const DecodeResult&) const = default;
};

int hamming_distance(const std::vector<int>& a, const std::vector<int>& b);

// Minimum Hamming distance decoding against the matrix rows. Ties are broken
// by the smallest class index.
DecodeResult decode(const CodingMatrix& m, const PredictionVector& p);

// Elementwise decode; with n_threads > 1 the batch is split across worker
// threads, results are identical to the sequential order.
std::vector<DecodeResult> decode_batch(const CodingMatrix& m,
                                       const std::vector<PredictionVector>& ps,
                                       int n_threads = 1);

}  // namespace necoc
