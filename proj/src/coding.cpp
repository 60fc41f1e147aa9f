#include "necoc/coding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "necoc/errors.hpp"
#include "necoc/seeding.hpp"

namespace necoc {

namespace {

void check_arity(int n_classes, int n_meta) {
  if (n_meta < 2 || n_meta > n_classes) {
    throw InvalidArity("n_meta must satisfy 2 <= n_meta <= n_classes, got n_meta=" +
                       std::to_string(n_meta) + " with n_classes=" +
                       std::to_string(n_classes));
  }
}

bool rows_all_distinct(const Eigen::MatrixXi& entries) {
  const int n = static_cast<int>(entries.rows());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (entries.row(a) == entries.row(b)) return false;
    }
  }
  return true;
}

int colliding_pairs(const Eigen::MatrixXi& entries, int* first_row) {
  const int n = static_cast<int>(entries.rows());
  int count = 0;
  if (first_row != nullptr) *first_row = -1;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (entries.row(a) == entries.row(b)) {
        ++count;
        if (first_row != nullptr && *first_row < 0) *first_row = a;
      }
    }
  }
  return count;
}

// Local search that removes row collisions. Swapping two entries within a
// column keeps the column's symbol counts intact, so range, surjectivity and
// balance are untouched; only row distinctness changes. Needed when the code
// space is barely larger than the class count (e.g. 26 classes, 5 binary
// columns) and whole-matrix resampling practically never lands on distinct
// rows.
bool repair_collisions(Eigen::MatrixXi& entries, RandomStream& rng) {
  const int n_classes = static_cast<int>(entries.rows());
  const int n_learners = static_cast<int>(entries.cols());
  int dup_row = -1;
  int collisions = colliding_pairs(entries, &dup_row);
  const int budget = 200 * n_classes;
  std::vector<int> partners;
  for (int step = 0; step < budget && collisions > 0; ++step) {
    const int col = static_cast<int>(
        rng.next_below(static_cast<std::uint64_t>(n_learners)));
    partners.clear();
    for (int r = 0; r < n_classes; ++r) {
      if (entries(r, col) != entries(dup_row, col)) partners.push_back(r);
    }
    if (partners.empty()) continue;  // constant column, try another
    const int partner = partners[static_cast<std::size_t>(
        rng.next_below(partners.size()))];
    std::swap(entries(dup_row, col), entries(partner, col));
    int next_dup = -1;
    const int after = colliding_pairs(entries, &next_dup);
    if (after > collisions) {
      std::swap(entries(dup_row, col), entries(partner, col));
    } else {
      collisions = after;
      dup_row = next_dup;
    }
  }
  return collisions == 0;
}

}  // namespace

MetaPartition random_balanced_partition(int n_classes, int n_meta,
                                        std::uint64_t seed) {
  check_arity(n_classes, n_meta);
  std::vector<int> order(n_classes);
  std::iota(order.begin(), order.end(), 0);
  RandomStream rng(seed);
  rng.shuffle(order);

  const int base = n_classes / n_meta;
  const int extra = n_classes % n_meta;

  MetaPartition p;
  p.class_to_meta.assign(n_classes, 0);
  p.subset_sizes.assign(n_meta, 0);
  int pos = 0;
  for (int meta = 0; meta < n_meta; ++meta) {
    const int size = base + (meta < extra ? 1 : 0);
    p.subset_sizes[meta] = size;
    for (int i = 0; i < size; ++i) {
      p.class_to_meta[order[pos++]] = meta + 1;
    }
  }
  return p;
}

CodingMatrix generate_coding_matrix(int n_classes, int n_learners, int n_meta,
                                    std::uint64_t seed) {
  check_arity(n_classes, n_meta);
  if (n_learners < 1) {
    throw InvalidArity("n_learners must be >= 1, got " +
                       std::to_string(n_learners));
  }

  constexpr int kMaxAttempts = 64;
  CodingMatrix m;
  m.n_classes = n_classes;
  m.n_learners = n_learners;
  m.n_meta = n_meta;
  m.seed = seed;
  m.entries.resize(n_classes, n_learners);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    for (int col = 0; col < n_learners; ++col) {
      const MetaPartition p = random_balanced_partition(
          n_classes, n_meta,
          derive_seed(seed, static_cast<std::uint64_t>(attempt),
                      static_cast<std::uint64_t>(col)));
      for (int row = 0; row < n_classes; ++row) {
        m.entries(row, col) = p.class_to_meta[row];
      }
    }
    if (rows_all_distinct(m.entries)) return m;
    RandomStream fix(derive_seed(seed, static_cast<std::uint64_t>(attempt),
                                 static_cast<std::uint64_t>(n_learners)));
    if (repair_collisions(m.entries, fix)) return m;
  }
  throw RowCollision("could not generate pairwise distinct rows for " +
                     std::to_string(n_classes) + "x" +
                     std::to_string(n_learners) + " matrix with n_meta=" +
                     std::to_string(n_meta) + " after " +
                     std::to_string(kMaxAttempts) + " attempts");
}

int hamming_distance_rows(const CodingMatrix& m, int row_a, int row_b) {
  int d = 0;
  for (int c = 0; c < m.n_learners; ++c) {
    if (m.entries(row_a, c) != m.entries(row_b, c)) ++d;
  }
  return d;
}

int min_row_distance(const CodingMatrix& m) {
  int best = m.n_learners;
  for (int a = 0; a < m.n_classes; ++a) {
    for (int b = a + 1; b < m.n_classes; ++b) {
      best = std::min(best, hamming_distance_rows(m, a, b));
    }
  }
  return best;
}

double mean_row_distance(const CodingMatrix& m) {
  long long total = 0;
  long long pairs = 0;
  for (int a = 0; a < m.n_classes; ++a) {
    for (int b = a + 1; b < m.n_classes; ++b) {
      total += hamming_distance_rows(m, a, b);
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(pairs);
}

double class_merge_degree(int n_classes, int n_meta) {
  check_arity(n_classes, n_meta);
  return static_cast<double>(n_classes - n_meta) / static_cast<double>(n_classes);
}

std::pair<int, int> suggested_learner_range(int n_classes) {
  const double lo = 10.0 * std::log(static_cast<double>(n_classes)) / std::log(2.2);
  const double hi = 10.0 * std::log(static_cast<double>(n_classes)) / std::log(1.5);
  return {static_cast<int>(std::floor(lo)), static_cast<int>(std::ceil(hi))};
}

ValidationReport validate(const CodingMatrix& m) {
  ValidationReport report;

  for (int col = 0; col < m.n_learners; ++col) {
    std::vector<int> counts(static_cast<std::size_t>(m.n_meta) + 1, 0);
    bool range_ok = true;
    for (int row = 0; row < m.n_classes; ++row) {
      const int e = m.entries(row, col);
      if (e < 1 || e > m.n_meta) {
        range_ok = false;
        Violation v;
        v.kind = Violation::Kind::range;
        v.row = row;
        v.col = col;
        v.message = "entry " + std::to_string(e) + " at row " +
                    std::to_string(row) + ", column " + std::to_string(col) +
                    " outside {1.." + std::to_string(m.n_meta) + "}";
        report.violations.push_back(std::move(v));
      } else {
        ++counts[static_cast<std::size_t>(e)];
      }
    }
    if (!range_ok) continue;  // surjectivity/balance are meaningless here

    for (int meta = 1; meta <= m.n_meta; ++meta) {
      if (counts[static_cast<std::size_t>(meta)] == 0) {
        Violation v;
        v.kind = Violation::Kind::surjectivity;
        v.col = col;
        v.message = "column " + std::to_string(col) + " never uses meta-class " +
                    std::to_string(meta);
        report.violations.push_back(std::move(v));
      }
    }
    const auto [mn, mx] =
        std::minmax_element(counts.begin() + 1, counts.end());
    if (*mx - *mn > 1) {
      Violation v;
      v.kind = Violation::Kind::balance;
      v.col = col;
      v.message = "column " + std::to_string(col) + " subset sizes range from " +
                  std::to_string(*mn) + " to " + std::to_string(*mx);
      report.violations.push_back(std::move(v));
    }
  }

  for (int a = 0; a < m.n_classes; ++a) {
    for (int b = a + 1; b < m.n_classes; ++b) {
      if (m.entries.row(a) == m.entries.row(b)) {
        Violation v;
        v.kind = Violation::Kind::row_collision;
        v.row = a;
        v.row2 = b;
        v.message = "rows " + std::to_string(a) + " and " + std::to_string(b) +
                    " are identical";
        report.violations.push_back(std::move(v));
      }
    }
  }
  return report;
}

MatrixMetrics matrix_metrics(const CodingMatrix& m) {
  MatrixMetrics out;
  out.min_row_distance = min_row_distance(m);
  out.mean_row_distance = mean_row_distance(m);
  out.merge_degree = class_merge_degree(m.n_classes, m.n_meta);
  return out;
}

MetaPartition column_partition(const CodingMatrix& m, int col) {
  if (col < 0 || col >= m.n_learners) {
    throw RangeError("column index " + std::to_string(col) +
                     " out of range for " + std::to_string(m.n_learners) +
                     " learners");
  }
  MetaPartition p;
  p.class_to_meta.resize(static_cast<std::size_t>(m.n_classes));
  p.subset_sizes.assign(static_cast<std::size_t>(m.n_meta), 0);
  for (int row = 0; row < m.n_classes; ++row) {
    const int e = m.entries(row, col);
    if (e < 1 || e > m.n_meta) {
      throw RangeError("entry " + std::to_string(e) + " at row " +
                       std::to_string(row) + ", column " + std::to_string(col) +
                       " outside {1.." + std::to_string(m.n_meta) + "}");
    }
    p.class_to_meta[static_cast<std::size_t>(row)] = e;
    ++p.subset_sizes[static_cast<std::size_t>(e - 1)];
  }
  return p;
}

void write_matrix(const CodingMatrix& m, std::ostream& out) {
  out << "# n_classes=" << m.n_classes << ",n_learners=" << m.n_learners
      << ",n_meta=" << m.n_meta << ",seed=" << m.seed << "\n";
  for (int row = 0; row < m.n_classes; ++row) {
    for (int col = 0; col < m.n_learners; ++col) {
      if (col > 0) out << ',';
      out << m.entries(row, col);
    }
    out << "\n";
  }
}

void write_matrix_file(const CodingMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_matrix(m, out);
  if (!out) throw IoError("failed writing " + path);
}

namespace {

// Parses "key=<non-negative integer>" pairs from the header line.
std::uint64_t parse_header_field(const std::string& header,
                                 const std::string& key) {
  const std::string pat = key + "=";
  const auto pos = header.find(pat);
  if (pos == std::string::npos) {
    throw ParseError("line 1: missing '" + key + "' in matrix header");
  }
  std::size_t i = pos + pat.size();
  if (i >= header.size() || !std::isdigit(static_cast<unsigned char>(header[i]))) {
    throw ParseError("line 1: malformed value for '" + key + "'");
  }
  std::uint64_t value = 0;
  while (i < header.size() && std::isdigit(static_cast<unsigned char>(header[i]))) {
    value = value * 10 + static_cast<std::uint64_t>(header[i] - '0');
    ++i;
  }
  return value;
}

}  // namespace

CodingMatrix read_matrix(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw ParseError("line 1: empty input, expected matrix header");
  }
  if (header.rfind("# ", 0) != 0) {
    throw ParseError("line 1: header must start with '# '");
  }

  CodingMatrix m;
  m.n_classes = static_cast<int>(parse_header_field(header, "n_classes"));
  m.n_learners = static_cast<int>(parse_header_field(header, "n_learners"));
  m.n_meta = static_cast<int>(parse_header_field(header, "n_meta"));
  m.seed = parse_header_field(header, "seed");
  if (m.n_classes < 2 || m.n_learners < 1 || m.n_meta < 1) {
    throw ParseError("line 1: header dimensions out of range");
  }

  m.entries.resize(m.n_classes, m.n_learners);
  std::string line;
  for (int row = 0; row < m.n_classes; ++row) {
    const int line_no = row + 2;
    if (!std::getline(in, line)) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": unexpected end of input, expected row " +
                       std::to_string(row));
    }
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    bool too_many = false;
    while (std::getline(ss, cell, ',')) {
      if (col >= m.n_learners) {
        too_many = true;
        break;
      }
      try {
        std::size_t used = 0;
        const int value = std::stoi(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        if (value < 1 || value > m.n_meta) {
          throw RangeError("line " + std::to_string(line_no) + ": entry " +
                           std::to_string(value) + " outside {1.." +
                           std::to_string(m.n_meta) + "}");
        }
        m.entries(row, col) = value;
      } catch (const std::invalid_argument&) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": malformed entry '" + cell + "'");
      } catch (const std::out_of_range&) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": entry out of integer range '" + cell + "'");
      }
      ++col;
    }
    if (col != m.n_learners || too_many) {
      throw ParseError("line " + std::to_string(line_no) + ": row " +
                       std::to_string(row) + " has wrong number of entries");
    }
  }
  return m;
}

CodingMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_matrix(in);
}

}  // namespace necoc
