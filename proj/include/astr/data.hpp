#pragma once

#include "astr/types.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace astr {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Immutable labelled sample set: CSR feature rows, one integer label per row
// and a disjoint train/test partition of the row indices.
class Dataset {
 public:
  Dataset() = default;
  // Validates: labels match rows, split is a partition of {0..n-1}.
  Dataset(SparseRows rows, std::vector<int> labels, IndexList train, IndexList test);
  // Every row in the training part.
  Dataset(SparseRows rows, std::vector<int> labels);

  const SparseRows& rows() const { return rows_; }
  const std::vector<int>& labels() const { return labels_; }
  const IndexList& train() const { return train_; }
  const IndexList& test() const { return test_; }

  Index size() const { return rows_.rows(); }
  Index dim() const { return rows_.cols(); }
  Index n_train() const { return static_cast<Index>(train_.size()); }
  Index n_test() const { return static_cast<Index>(test_.size()); }

  // Sorted distinct labels.
  std::vector<int> classes() const;

  // Same rows and labels under a different partition.
  Dataset with_split(IndexList train, IndexList test) const;

 private:
  SparseRows rows_;
  std::vector<int> labels_;
  IndexList train_;
  IndexList test_;
};

// LIBSVM / SVMlight text: "label idx:val idx:val ..." with 1-based, strictly
// increasing indices. Blank lines are skipped. The dimension is the largest
// index seen unless `dim` is given (it must then cover every index).
Dataset parse_libsvm(std::istream& in, std::optional<Index> dim = std::nullopt);
Dataset parse_libsvm(std::string_view text, std::optional<Index> dim = std::nullopt);
void write_libsvm(std::ostream& out, const Dataset& data);

// Reads a whole file, transparently inflating gzip.
std::string read_file(const std::filesystem::path& path);

Dataset load_libsvm_file(const std::filesystem::path& path, std::optional<Index> dim = std::nullopt);

// Train file plus separate test file, keeping the given split. The shared
// dimension is the maximum over both files unless `dim` is given.
Dataset load_libsvm_pair(const std::filesystem::path& train_path,
                         const std::filesystem::path& test_path,
                         std::optional<Index> dim = std::nullopt);

enum class DigitLabels {
  digits,    // class id 0..9
  odd_even,  // odd digit -> +1, even digit -> -1
};

// IDX image/label pair (magic 0x00000803 / 0x00000801, big-endian header).
// Pixels are scaled to [0, 1].
Dataset load_idx(std::string_view image_bytes, std::string_view label_bytes, DigitLabels mapping);
Dataset load_idx(std::istream& images, std::istream& labels, DigitLabels mapping);

// Concatenate two datasets; rows of `a` become the train part and rows of
// `b` the test part.
Dataset stack_train_test(const Dataset& a, const Dataset& b);

// Seeded random partition with ceil(test_fraction * n) test rows.
Dataset random_split(const Dataset& data, double test_fraction, std::uint64_t seed);

// Keep at most `max_train` training rows (seeded choice); the test part is untouched.
Dataset subsample_train(const Dataset& data, Index max_train, std::uint64_t seed);

// Divide every column by its largest absolute value over the training rows.
Dataset scale_columns(const Dataset& data);

// Gaussian features, planted weight vector w ~ N(0, 4/d I), labels drawn
// from the logistic model as +/-1. Bumping kSynthGeneratorVersion is
// required whenever the generated bytes change.
inline constexpr int kSynthGeneratorVersion = 1;
Dataset synth_logistic(Index n, Index d, std::uint64_t seed);

SparseRows select_rows(const SparseRows& rows, IndexSpan which);

// FNV-1a over dimensions, CSR arrays, labels and split.
std::uint64_t fingerprint(const Dataset& data);

}  // namespace astr
