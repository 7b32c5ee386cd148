#include "astr/data.hpp"

#include "astr/errors.hpp"
#include "astr/hash.hpp"
#include "astr/random.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>

namespace astr {

namespace {

void check_partition(Index n, const IndexList& train, const IndexList& test) {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const IndexList* part : {&train, &test}) {
    for (Index i : *part) {
      if (i < 0 || i >= n) throw ContractError("Dataset: split index out of range");
      if (seen[static_cast<std::size_t>(i)]) throw ContractError("Dataset: split parts overlap");
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }
  if (train.size() + test.size() != static_cast<std::size_t>(n)) {
    throw ContractError("Dataset: split does not cover every row");
  }
}

}  // namespace

Dataset::Dataset(SparseRows rows, std::vector<int> labels, IndexList train, IndexList test)
    : rows_(std::move(rows)), labels_(std::move(labels)), train_(std::move(train)), test_(std::move(test)) {
  rows_.makeCompressed();
  if (static_cast<Index>(labels_.size()) != rows_.rows()) {
    throw ContractError("Dataset: one label per row required");
  }
  check_partition(rows_.rows(), train_, test_);
}

Dataset::Dataset(SparseRows rows, std::vector<int> labels)
    : rows_(std::move(rows)), labels_(std::move(labels)), train_(iota_indices(rows_.rows())) {
  rows_.makeCompressed();
  if (static_cast<Index>(labels_.size()) != rows_.rows()) {
    throw ContractError("Dataset: one label per row required");
  }
}

std::vector<int> Dataset::classes() const {
  std::set<int> distinct(labels_.begin(), labels_.end());
  return {distinct.begin(), distinct.end()};
}

Dataset Dataset::with_split(IndexList train, IndexList test) const {
  return Dataset(rows_, labels_, std::move(train), std::move(test));
}

// ---------------------------------------------------------------------------
// LIBSVM text

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

struct Triplets {
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<int> labels;
  Index max_index = 0;
};

void parse_line(std::string_view line, std::size_t lineno, Triplets& acc) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string_view {
    while (pos < line.size() && is_space(line[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && !is_space(line[pos])) ++pos;
    return line.substr(start, pos - start);
  };

  std::string_view tok = next_token();
  if (tok.empty()) return;  // blank line
  double label = 0.0;
  if (!parse_double(tok, label) || label != std::trunc(label) || std::abs(label) > 1e9) {
    throw ParseError(lineno, "malformed label '" + std::string(tok) + "'");
  }
  const auto row = static_cast<Index>(acc.labels.size());
  acc.labels.push_back(static_cast<int>(label));

  Index last = 0;
  for (tok = next_token(); !tok.empty(); tok = next_token()) {
    const std::size_t colon = tok.find(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw ParseError(lineno, "malformed feature token '" + std::string(tok) + "'");
    }
    const std::string_view idx_text = tok.substr(0, colon);
    long long idx = 0;
    const auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
    if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() || idx < 1) {
      throw ParseError(lineno, "malformed feature index '" + std::string(idx_text) + "'");
    }
    if (idx <= last) {
      throw ParseError(lineno, "feature indices must be strictly increasing (" +
                                   std::to_string(idx) + " after " + std::to_string(last) + ")");
    }
    double value = 0.0;
    if (!parse_double(tok.substr(colon + 1), value)) {
      throw ParseError(lineno, "malformed feature value in '" + std::string(tok) + "'");
    }
    last = static_cast<Index>(idx);
    acc.entries.emplace_back(static_cast<int>(row), static_cast<int>(idx - 1), value);
  }
  acc.max_index = std::max(acc.max_index, last);
}

Dataset build(Triplets&& acc, std::optional<Index> dim) {
  Index d = acc.max_index;
  if (dim) {
    if (*dim < acc.max_index) {
      throw ContractError("parse_libsvm: dimension override smaller than largest index " +
                          std::to_string(acc.max_index));
    }
    d = *dim;
  }
  SparseRows rows(static_cast<Index>(acc.labels.size()), d);
  rows.setFromTriplets(acc.entries.begin(), acc.entries.end());
  return Dataset(std::move(rows), std::move(acc.labels));
}

}  // namespace

Dataset parse_libsvm(std::string_view text, std::optional<Index> dim) {
  Triplets acc;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const std::size_t nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    parse_line(line, lineno, acc);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return build(std::move(acc), dim);
}

Dataset parse_libsvm(std::istream& in, std::optional<Index> dim) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_libsvm(std::string_view(text), dim);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  std::array<char, 64> buf{};
  const SparseRows& rows = data.rows();
  for (Index i = 0; i < rows.rows(); ++i) {
    out << data.labels()[static_cast<std::size_t>(i)];
    for (SparseRows::InnerIterator it(rows, i); it; ++it) {
      // Shortest representation that round-trips exactly.
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), it.value());
      out << ' ' << (it.col() + 1) << ':' << std::string_view(buf.data(), res.ptr - buf.data());
    }
    out << '\n';
  }
}

std::string read_file(const std::filesystem::path& path) {
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (file == nullptr) throw std::runtime_error("cannot open " + path.string());
  std::string data;
  std::array<char, 1 << 16> buf{};
  int got = 0;
  while ((got = gzread(file, buf.data(), static_cast<unsigned>(buf.size()))) > 0) {
    data.append(buf.data(), static_cast<std::size_t>(got));
  }
  int errnum = 0;
  const char* msg = gzerror(file, &errnum);
  const std::string detail = msg ? msg : "";
  gzclose(file);
  if (got < 0 || (errnum != Z_OK && errnum != Z_STREAM_END)) {
    throw std::runtime_error("error reading " + path.string() + ": " + detail);
  }
  return data;
}

Dataset load_libsvm_file(const std::filesystem::path& path, std::optional<Index> dim) {
  return parse_libsvm(std::string_view(read_file(path)), dim);
}

Dataset load_libsvm_pair(const std::filesystem::path& train_path,
                         const std::filesystem::path& test_path, std::optional<Index> dim) {
  Dataset train = load_libsvm_file(train_path);
  Dataset test = load_libsvm_file(test_path);
  const Index d = dim.value_or(std::max(train.dim(), test.dim()));
  if (d < train.dim() || d < test.dim()) {
    throw ContractError("load_libsvm_pair: dimension override smaller than data");
  }
  auto widen = [d](const Dataset& ds) {
    SparseRows rows = ds.rows();
    rows.conservativeResize(rows.rows(), d);
    return Dataset(std::move(rows), ds.labels());
  };
  return stack_train_test(widen(train), widen(test));
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::uint32_t read_be32(std::string_view bytes, std::size_t offset) {
  if (bytes.size() < offset + 4) throw FormatError("IDX: truncated header");
  std::uint32_t v = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    v = (v << 8) | static_cast<unsigned char>(bytes[offset + k]);
  }
  return v;
}

}  // namespace

Dataset load_idx(std::string_view image_bytes, std::string_view label_bytes, DigitLabels mapping) {
  if (read_be32(image_bytes, 0) != 0x00000803u) throw FormatError("IDX: bad image magic");
  if (read_be32(label_bytes, 0) != 0x00000801u) throw FormatError("IDX: bad label magic");
  const std::size_t count = read_be32(image_bytes, 4);
  const std::size_t height = read_be32(image_bytes, 8);
  const std::size_t width = read_be32(image_bytes, 12);
  const std::size_t label_count = read_be32(label_bytes, 4);
  if (label_count != count) throw FormatError("IDX: image and label counts differ");
  const std::size_t pixels = height * width;
  if (image_bytes.size() < 16 + count * pixels) throw FormatError("IDX: truncated image data");
  if (label_bytes.size() < 8 + count) throw FormatError("IDX: truncated label data");

  std::vector<Eigen::Triplet<double>> entries;
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t base = 16 + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p) {
      const auto raw = static_cast<unsigned char>(image_bytes[base + p]);
      if (raw != 0) entries.emplace_back(static_cast<int>(i), static_cast<int>(p), raw / 255.0);
    }
    const int digit = static_cast<unsigned char>(label_bytes[8 + i]);
    labels[i] = mapping == DigitLabels::digits ? digit : (digit % 2 == 1 ? 1 : -1);
  }
  SparseRows rows(static_cast<Index>(count), static_cast<Index>(pixels));
  rows.setFromTriplets(entries.begin(), entries.end());
  return Dataset(std::move(rows), std::move(labels));
}

Dataset load_idx(std::istream& images, std::istream& labels, DigitLabels mapping) {
  const std::string img{std::istreambuf_iterator<char>(images), std::istreambuf_iterator<char>()};
  const std::string lab{std::istreambuf_iterator<char>(labels), std::istreambuf_iterator<char>()};
  return load_idx(std::string_view(img), std::string_view(lab), mapping);
}

// ---------------------------------------------------------------------------
// Splits and transforms

Dataset stack_train_test(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim()) throw ContractError("stack_train_test: dimensions differ");
  const Index na = a.size();
  const Index nb = b.size();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(a.rows().nonZeros() + b.rows().nonZeros()));
  auto append = [&entries](const SparseRows& rows, Index offset) {
    for (Index i = 0; i < rows.rows(); ++i) {
      for (SparseRows::InnerIterator it(rows, i); it; ++it) {
        entries.emplace_back(static_cast<int>(i + offset), static_cast<int>(it.col()), it.value());
      }
    }
  };
  append(a.rows(), 0);
  append(b.rows(), na);
  SparseRows rows(na + nb, a.dim());
  rows.setFromTriplets(entries.begin(), entries.end());
  std::vector<int> labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  IndexList train = iota_indices(na);
  IndexList test(static_cast<std::size_t>(nb));
  for (Index i = 0; i < nb; ++i) test[static_cast<std::size_t>(i)] = na + i;
  return Dataset(std::move(rows), std::move(labels), std::move(train), std::move(test));
}

Dataset random_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ContractError("random_split: test_fraction must lie in (0, 1)");
  }
  const Index n = data.size();
  Index n_test = ceil_count(test_fraction * static_cast<double>(n));
  if (n > 1) n_test = std::min(n_test, n - 1);
  Rng rng(seed);
  IndexList perm = iota_indices(n);
  for (Index i = n - 1; i > 0; --i) {
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(rng.uniform_index(i + 1))]);
  }
  IndexList test(perm.begin(), perm.begin() + n_test);
  IndexList train(perm.begin() + n_test, perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return data.with_split(std::move(train), std::move(test));
}

Dataset subsample_train(const Dataset& data, Index max_train, std::uint64_t seed) {
  if (max_train < 1) throw ContractError("subsample_train: max_train must be >= 1");
  if (data.n_train() <= max_train) return data;
  Rng rng(seed);
  IndexList kept = sample_subset(data.train(), max_train, rng);
  // Dropped rows leave the dataset entirely.
  IndexList keep_rows = kept;
  keep_rows.insert(keep_rows.end(), data.test().begin(), data.test().end());
  std::vector<int> labels;
  labels.reserve(keep_rows.size());
  for (Index i : keep_rows) labels.push_back(data.labels()[static_cast<std::size_t>(i)]);
  const auto n_kept = static_cast<Index>(kept.size());
  IndexList train = iota_indices(n_kept);
  IndexList test;
  for (Index i = n_kept; i < static_cast<Index>(keep_rows.size()); ++i) test.push_back(i);
  return Dataset(select_rows(data.rows(), keep_rows), std::move(labels), std::move(train), std::move(test));
}

Dataset scale_columns(const Dataset& data) {
  Eigen::ArrayXd scale = Eigen::ArrayXd::Zero(data.dim());
  for (Index i : data.train()) {
    for (SparseRows::InnerIterator it(data.rows(), i); it; ++it) {
      scale(it.col()) = std::max(scale(it.col()), std::abs(it.value()));
    }
  }
  SparseRows rows = data.rows();
  for (Index i = 0; i < rows.outerSize(); ++i) {
    for (SparseRows::InnerIterator it(rows, i); it; ++it) {
      if (scale(it.col()) > 0.0) it.valueRef() /= scale(it.col());
    }
  }
  return Dataset(std::move(rows), data.labels(), data.train(), data.test());
}

Dataset synth_logistic(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ContractError("synth_logistic: n and d must be >= 1");
  Rng rng(seed);
  const double weight_scale = 2.0 / std::sqrt(static_cast<double>(d));
  Vector planted(d);
  for (Index j = 0; j < d; ++j) planted(j) = weight_scale * rng.normal();

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n * d));
  std::vector<int> labels(static_cast<std::size_t>(n));
  Vector z(d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      z(j) = rng.normal();
      entries.emplace_back(static_cast<int>(i), static_cast<int>(j), z(j));
    }
    const double p = 1.0 / (1.0 + std::exp(-planted.dot(z)));
    labels[static_cast<std::size_t>(i)] = rng.uniform01() < p ? 1 : -1;
  }
  SparseRows rows(n, d);
  rows.setFromTriplets(entries.begin(), entries.end());
  return Dataset(std::move(rows), std::move(labels));
}

SparseRows select_rows(const SparseRows& rows, IndexSpan which) {
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t k = 0; k < which.size(); ++k) {
    for (SparseRows::InnerIterator it(rows, which[k]); it; ++it) {
      entries.emplace_back(static_cast<int>(k), static_cast<int>(it.col()), it.value());
    }
  }
  SparseRows out(static_cast<Index>(which.size()), rows.cols());
  out.setFromTriplets(entries.begin(), entries.end());
  out.makeCompressed();
  return out;
}

std::uint64_t fingerprint(const Dataset& data) {
  detail::Fnv1a h;
  h.add(data.size());
  h.add(data.dim());
  const SparseRows& rows = data.rows();
  for (Index i = 0; i < rows.rows(); ++i) {
    for (SparseRows::InnerIterator it(rows, i); it; ++it) {
      h.add(it.col());
      h.add(it.value());
    }
    h.add(Index{-1});
  }
  for (int label : data.labels()) h.add(label);
  for (Index i : data.train()) h.add(i);
  h.add(Index{-2});
  for (Index i : data.test()) h.add(i);
  return h.value();
}

}  // namespace astr
