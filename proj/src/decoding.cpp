#include "necoc/decoding.hpp"

#include <string>
#include <thread>

#include "necoc/errors.hpp"

namespace necoc {

int hamming_distance(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) {
    throw LengthMismatch("hamming_distance: lengths " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()) + " differ");
  }
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) ++d;
  }
  return d;
}

namespace {

void check_prediction(const CodingMatrix& m, const PredictionVector& p) {
  if (static_cast<int>(p.size()) != m.n_learners) {
    throw LengthMismatch("prediction vector length " + std::to_string(p.size()) +
                         " does not match n_learners=" +
                         std::to_string(m.n_learners));
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 1 || p[i] > m.n_meta) {
      throw RangeError("prediction code " + std::to_string(p[i]) +
                       " at position " + std::to_string(i) + " outside {1.." +
                       std::to_string(m.n_meta) + "}");
    }
  }
}

DecodeResult decode_checked(const CodingMatrix& m, const PredictionVector& p) {
  DecodeResult best;
  best.class_index = 0;
  best.distance = m.n_learners + 1;
  best.tie_count = 0;
  for (int row = 0; row < m.n_classes; ++row) {
    int d = 0;
    for (int col = 0; col < m.n_learners; ++col) {
      if (m.entries(row, col) != p[static_cast<std::size_t>(col)]) ++d;
    }
    if (d < best.distance) {
      best.distance = d;
      best.class_index = row;
      best.tie_count = 1;
    } else if (d == best.distance) {
      ++best.tie_count;
    }
  }
  return best;
}

}  // namespace

DecodeResult decode(const CodingMatrix& m, const PredictionVector& p) {
  check_prediction(m, p);
  return decode_checked(m, p);
}

std::vector<DecodeResult> decode_batch(const CodingMatrix& m,
                                       const std::vector<PredictionVector>& ps,
                                       int n_threads) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    try {
      check_prediction(m, ps[i]);
    } catch (const LengthMismatch& e) {
      throw LengthMismatch("sample " + std::to_string(i) + ": " + e.what());
    } catch (const RangeError& e) {
      throw RangeError("sample " + std::to_string(i) + ": " + e.what());
    }
  }

  std::vector<DecodeResult> out(ps.size());
  if (n_threads <= 1 || ps.size() < 2) {
    for (std::size_t i = 0; i < ps.size(); ++i) out[i] = decode_checked(m, ps[i]);
    return out;
  }

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(n_threads), ps.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < ps.size(); i += workers) {
        out[i] = decode_checked(m, ps[i]);
      }
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace necoc
