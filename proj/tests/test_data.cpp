#include "astr/data.hpp"
#include "astr/errors.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <zlib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace astr {
namespace {

double entry(const Dataset& d, Index i, Index j) { return d.rows().coeff(i, j); }

TEST(ParseLibsvm, SingleRow) {
  const Dataset d = parse_libsvm("+1 1:0.5 3:-2\n");
  ASSERT_EQ(d.size(), 1);
  EXPECT_EQ(d.dim(), 3);
  EXPECT_EQ(d.labels()[0], 1);
  EXPECT_EQ(entry(d, 0, 0), 0.5);
  EXPECT_EQ(entry(d, 0, 1), 0.0);
  EXPECT_EQ(entry(d, 0, 2), -2.0);
  EXPECT_EQ(d.rows().nonZeros(), 2);
}

TEST(ParseLibsvm, EmptyFeatureRow) {
  const Dataset d = parse_libsvm("-1\n");
  ASSERT_EQ(d.size(), 1);
  EXPECT_EQ(d.labels()[0], -1);
  EXPECT_EQ(d.rows().nonZeros(), 0);
}

TEST(ParseLibsvm, BlankLinesCrlfAndDimOverride) {
  const Dataset d = parse_libsvm("1 2:1\r\n\n0 1:3\r\n", 10);
  EXPECT_EQ(d.size(), 2);
  EXPECT_EQ(d.dim(), 10);
  EXPECT_EQ(d.labels(), (std::vector<int>{1, 0}));
  EXPECT_EQ(d.n_train(), 2);
  EXPECT_EQ(d.n_test(), 0);
}

TEST(ParseLibsvm, ErrorsCarryLineNumbers) {
  auto line_of = [](std::string_view text) -> std::size_t {
    try {
      parse_libsvm(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("1 1:1\n1 3:1 2:1\n"), 2u);
  EXPECT_EQ(line_of("1 1:1 1:2\n"), 1u);
  EXPECT_EQ(line_of("1 1:1\n\nx 1:1\n"), 3u);
  EXPECT_EQ(line_of("1 0:1\n"), 1u);
  EXPECT_EQ(line_of("1 1:abc\n"), 1u);
  EXPECT_EQ(line_of("1 1\n"), 1u);
  EXPECT_EQ(line_of("1.5 1:1\n"), 1u);
  EXPECT_EQ(line_of("1 :1\n"), 1u);
  EXPECT_THROW(parse_libsvm("1 5:1\n", 3), ContractError);
}

TEST(ParseLibsvm, RoundTrip) {
  const Dataset d = testing::random_sparse_dataset(40, 25, 0.3, 17);
  std::ostringstream out;
  write_libsvm(out, d);
  const Dataset back = parse_libsvm(out.str(), d.dim());
  ASSERT_EQ(back.size(), d.size());
  EXPECT_EQ(back.labels(), d.labels());
  const Eigen::MatrixXd a(d.rows());
  const Eigen::MatrixXd b(back.rows());
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(fingerprint(back), fingerprint(d));
}

std::string be32(std::uint32_t v) {
  return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8), static_cast<char>(v)};
}

std::pair<std::string, std::string> idx_pair(const std::vector<std::string>& images, const std::string& labels) {
  std::string img = be32(0x803) + be32(static_cast<std::uint32_t>(images.size())) + be32(2) + be32(2);
  for (const auto& i : images) img += i;
  const std::string lab = be32(0x801) + be32(static_cast<std::uint32_t>(labels.size())) + labels;
  return {img, lab};
}

TEST(LoadIdx, HandBuiltPair) {
  const auto [img, lab] = idx_pair({std::string("\x00\xff\x80\x01", 4)}, std::string("\x07", 1));
  const Dataset d = load_idx(img, lab, DigitLabels::digits);
  ASSERT_EQ(d.size(), 1);
  EXPECT_EQ(d.dim(), 4);
  EXPECT_EQ(d.labels()[0], 7);
  EXPECT_EQ(entry(d, 0, 0), 0.0);
  EXPECT_EQ(entry(d, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(entry(d, 0, 2), 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(entry(d, 0, 3), 1.0 / 255.0);
}

TEST(LoadIdx, OddEvenParity) {
  const std::string px(4, '\0');
  const auto [img, lab] = idx_pair({px, px}, std::string("\x07\x04", 2));
  std::istringstream is(img);
  std::istringstream ls(lab);
  const Dataset d = load_idx(is, ls, DigitLabels::odd_even);
  EXPECT_EQ(d.labels(), (std::vector<int>{1, -1}));
}

TEST(LoadIdx, Errors) {
  const std::string px(4, '\0');
  auto [img, lab] = idx_pair({px}, std::string("\x01", 1));
  std::string bad_magic = img;
  bad_magic[3] = 0x01;
  EXPECT_THROW(load_idx(bad_magic, lab, DigitLabels::digits), FormatError);
  EXPECT_THROW(load_idx(img, img, DigitLabels::digits), FormatError);
  EXPECT_THROW(load_idx(img.substr(0, img.size() - 1), lab, DigitLabels::digits), FormatError);
  EXPECT_THROW(load_idx(img.substr(0, 6), lab, DigitLabels::digits), FormatError);
  EXPECT_THROW(load_idx(img, lab.substr(0, 8), DigitLabels::digits), FormatError);
}

TEST(RandomSplit, SizesAndDeterminism) {
  const Dataset d = testing::random_sparse_dataset(10, 3, 0.5, 1);
  const Dataset a = random_split(d, 0.1, 5);
  EXPECT_EQ(a.n_test(), 1);
  EXPECT_EQ(a.n_train(), 9);
  const Dataset b = random_split(d, 0.1, 5);
  EXPECT_EQ(a.train(), b.train());
  EXPECT_EQ(a.test(), b.test());
  EXPECT_THROW(random_split(d, 0.0, 1), ContractError);
  EXPECT_THROW(random_split(d, 1.0, 1), ContractError);
}

TEST(RandomSplit, AlwaysAPartition) {
  const Dataset d = testing::random_sparse_dataset(37, 3, 0.5, 2);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dataset s = random_split(d, 0.1, seed);
    EXPECT_EQ(s.n_test(), 4);
    std::set<Index> seen(s.train().begin(), s.train().end());
    for (Index i : s.test()) EXPECT_TRUE(seen.insert(i).second);
    EXPECT_EQ(seen.size(), 37u);
    EXPECT_EQ(*seen.begin(), 0);
    EXPECT_EQ(*seen.rbegin(), 36);
  }
}

TEST(DatasetTest, RejectsBadPartitions) {
  SparseRows rows(3, 2);
  EXPECT_THROW(Dataset(rows, {1, 1}), ContractError);
  EXPECT_THROW(Dataset(rows, {1, 1, 1}, {0, 1}, {1, 2}), ContractError);
  EXPECT_THROW(Dataset(rows, {1, 1, 1}, {0}, {1}), ContractError);
  EXPECT_THROW(Dataset(rows, {1, 1, 1}, {0, 1}, {3}), ContractError);
  EXPECT_NO_THROW(Dataset(rows, {1, 1, 1}, {0, 2}, {1}));
}

TEST(SynthLogistic, BalanceAndDeterminism) {
  const Dataset a = synth_logistic(2000, 20, 7);
  const double positive =
      static_cast<double>(std::count(a.labels().begin(), a.labels().end(), 1)) / static_cast<double>(a.size());
  EXPECT_GE(positive, 0.3);
  EXPECT_LE(positive, 0.7);
  const Dataset b = synth_logistic(2000, 20, 7);
  std::ostringstream sa, sb;
  write_libsvm(sa, a);
  write_libsvm(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_NE(fingerprint(a), fingerprint(synth_logistic(2000, 20, 8)));
}

TEST(Transforms, StackSubsampleScale) {
  const Dataset a = parse_libsvm("1 1:2\n-1 2:-4\n");
  const Dataset b = parse_libsvm("1 1:8 2:1\n");
  const Dataset s = stack_train_test(a, b);
  EXPECT_EQ(s.train(), (IndexList{0, 1}));
  EXPECT_EQ(s.test(), (IndexList{2}));
  const Dataset scaled = scale_columns(s);
  EXPECT_DOUBLE_EQ(entry(scaled, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(entry(scaled, 1, 1), -1.0);
  EXPECT_DOUBLE_EQ(entry(scaled, 2, 0), 4.0);  // test rows use the training scale
  const Dataset sub = subsample_train(s, 1, 3);
  EXPECT_EQ(sub.n_train(), 1);
  EXPECT_EQ(sub.n_test(), 1);
  EXPECT_EQ(sub.size(), 2);
}

TEST(Files, GzipAndPair) {
  const auto dir = std::filesystem::temp_directory_path() / "astr_data_test";
  std::filesystem::create_directories(dir);
  const std::string train = "1 1:1\n-1 3:2\n";
  {
    gzFile gz = gzopen((dir / "train.gz").c_str(), "wb");
    ASSERT_NE(gz, nullptr);
    gzwrite(gz, train.data(), static_cast<unsigned>(train.size()));
    gzclose(gz);
  }
  std::ofstream(dir / "test.txt") << "1 5:1\n";
  EXPECT_EQ(read_file(dir / "train.gz"), train);
  const Dataset d = load_libsvm_pair(dir / "train.gz", dir / "test.txt");
  EXPECT_EQ(d.dim(), 5);
  EXPECT_EQ(d.n_train(), 2);
  EXPECT_EQ(d.n_test(), 1);
  EXPECT_THROW(read_file(dir / "missing"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace astr
