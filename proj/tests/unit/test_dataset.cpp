#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "sharp/dataset.hpp"

using namespace sharp;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("sharp-dataset-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p.string();
  }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void put_be32(std::string& s, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xff));
}

std::string idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols, const std::vector<unsigned char>& px) {
  std::string s;
  put_be32(s, 0x803);
  put_be32(s, count);
  put_be32(s, rows);
  put_be32(s, cols);
  s.append(px.begin(), px.end());
  return s;
}

std::string idx_labels(const std::vector<unsigned char>& labels) {
  std::string s;
  put_be32(s, 0x801);
  put_be32(s, static_cast<std::uint32_t>(labels.size()));
  s.append(labels.begin(), labels.end());
  return s;
}

template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

Dataset labelled(std::vector<int> counts) {
  Dataset d;
  std::size_t m = 0;
  for (int c : counts) m += static_cast<std::size_t>(c);
  d.x = Tensor(Shape{m, 1});
  std::size_t r = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (int i = 0; i < counts[k]; ++i, ++r) {
      d.x.at(r, 0) = static_cast<double>(r);
      d.labels.push_back(static_cast<int>(k) + 1);
    }
    d.label_names.push_back("c" + std::to_string(k + 1));
  }
  return d;
}

}  // namespace

TEST(Csv, ParsesNumericMatrix) {
  TempDir dir;
  const auto d = load_csv(dir.file("a.csv", "a,b\n0,1\n2,3\n4,5\n"));
  EXPECT_EQ(d.x, Tensor::matrix({{0, 1}, {2, 3}, {4, 5}}));
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_FALSE(d.has_labels());
  EXPECT_EQ(d.name, "a.csv");
}

TEST(Csv, AcceptsCrlfQuotesAndExponents) {
  TempDir dir;
  const auto d = load_csv(dir.file("q.csv", "\"x\",y,label\r\n1e-3,-2.5,\"a,b\"\r\n4,+5,c\r\n"), "label");
  EXPECT_EQ(d.x, Tensor::matrix({{1e-3, -2.5}, {4, 5}}));
  EXPECT_EQ(d.label_names, (std::vector<std::string>{"a,b", "c"}));
}

TEST(Csv, FactorisesLabels) {
  TempDir dir;
  const auto d = load_csv(dir.file("l.csv", "f,animal\n1,cat\n2,dog\n3,cat\n"), "animal");
  EXPECT_EQ(d.labels, (std::vector<int>{1, 2, 1}));
  EXPECT_EQ(d.classes(), 2u);
  EXPECT_EQ(d.label_names, (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(d.x, Tensor::matrix({{1}, {2}, {3}}));
  const auto n = load_csv(dir.file("n.csv", "f,y\n1,10\n2,9\n3,10\n4,2\n"), "y");
  EXPECT_EQ(n.labels, (std::vector<int>{3, 2, 3, 1}));  // numeric order 2 < 9 < 10
}

TEST(Csv, RejectsNaNCitingRow) {
  TempDir dir;
  const auto msg = error_of([&] { load_csv(dir.file("nan.csv", "a,b\n0,1\n2,NaN\n")); });
  EXPECT_NE(msg.find("row 1 (line 3)"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
}

TEST(Csv, RejectsMalformedInput) {
  TempDir dir;
  EXPECT_NE(error_of([&] { load_csv(dir.file("r.csv", "a,b\n0,1\n2\n")); }).find("row 1 (line 3)"), std::string::npos);
  EXPECT_NE(error_of([&] { load_csv(dir.file("t.csv", "a,b\n0,x\n")); }).find("'b'"), std::string::npos);
  EXPECT_NE(error_of([&] { load_csv(dir.file("u.csv", "a,b\n0,1\n"), "label"); }).find("label"), std::string::npos);
  EXPECT_THROW(load_csv(dir.file("i.csv", "a\ninf\n")), DataError);
  EXPECT_THROW(load_csv(dir.file("e.csv", "")), DataError);
  EXPECT_THROW(load_csv(dir.file("h.csv", "a,b\n")), DataError);
  EXPECT_THROW(load_csv(dir.file("x.csv", "a\n1.5abc\n")), DataError);
  EXPECT_THROW(load_csv(dir.path("missing.csv")), DataError);
}

TEST(Idx, DividesBytesBy255) {
  TempDir dir;
  const auto d = load_idx(dir.file("img", idx_images(1, 2, 2, {0, 255, 128, 64})));
  ASSERT_EQ(d.x.shape(), (Shape{1, 4}));
  EXPECT_EQ(d.x[0], 0.0);
  EXPECT_EQ(d.x[1], 1.0);
  EXPECT_NEAR(d.x[2], 0.50196, 1e-5);
  EXPECT_NEAR(d.x[3], 0.25098, 1e-5);
  EXPECT_EQ(d.x[2], 128.0 / 255.0);
}

TEST(Idx, ReadsLabels) {
  TempDir dir;
  const auto d = load_idx(dir.file("img", idx_images(3, 1, 2, {1, 2, 3, 4, 5, 6})), dir.file("lab", idx_labels({7, 0, 7})));
  EXPECT_EQ(d.labels, (std::vector<int>{2, 1, 2}));
  EXPECT_EQ(d.label_names, (std::vector<std::string>{"0", "7"}));
}

TEST(Idx, RejectsBadFiles) {
  TempDir dir;
  auto bad_magic = idx_images(1, 1, 1, {0});
  bad_magic[3] = 0x04;
  EXPECT_THROW(load_idx(dir.file("m", bad_magic)), DataError);
  EXPECT_THROW(load_idx(dir.file("short", idx_images(2, 2, 2, {0, 1, 2, 3, 4}))), DataError);
  EXPECT_THROW(load_idx(dir.file("long", idx_images(1, 1, 1, {0, 1}))), DataError);
  const auto img = dir.file("img", idx_images(2, 1, 1, {0, 1}));
  EXPECT_NE(error_of([&] { load_idx(img, dir.file("lab", idx_labels({1, 2, 3}))); }).find("3"), std::string::npos);
  EXPECT_THROW(load_idx(img, dir.file("lab2", idx_images(2, 1, 1, {0, 1}))), DataError);
}

TEST(Idx, BundledMnistSubsetHeader) {
  const auto d = load_idx(SHARP_TEST_DATA_DIR "/mnist5k-images.idx3-ubyte", SHARP_TEST_DATA_DIR "/mnist5k-labels.idx1-ubyte");
  EXPECT_EQ(d.rows(), 5000u);
  EXPECT_EQ(d.dims(), 784u);
  EXPECT_EQ(d.classes(), 10u);
}

TEST(Scaling, MinMaxFormula) {
  Dataset d;
  d.x = Tensor::matrix({{2, 5}, {4, 5}, {6, 5}});
  const auto s = scale_minmax(d);
  EXPECT_EQ(s.x, Tensor::matrix({{0, 0}, {0.5, 0}, {1, 0}}));
  EXPECT_EQ(s.feature_min, (std::vector<double>{2, 5}));
  EXPECT_EQ(s.feature_max, (std::vector<double>{6, 5}));
  EXPECT_TRUE(s.scaled());
}

TEST(Scaling, IsIdempotent) {
  Dataset d;
  d.x = Tensor::matrix({{-3, 1e6, 0.25}, {7, 2e6, 0.5}, {1, 1.5e6, 2}, {2, -1, 0.75}});
  const auto once = scale_minmax(d);
  const auto twice = scale_minmax(once);
  EXPECT_EQ(twice.x, once.x);
  EXPECT_EQ(twice.feature_min, once.feature_min);
  EXPECT_EQ(twice.feature_max, once.feature_max);
  for (double v : once.x.storage()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Scaling, OutOfSampleClamps) {
  const std::vector<double> lo{0, 10}, hi{2, 10};
  const Tensor r = apply_scaling(Tensor::matrix({{1, 10}, {-1, 12}, {5, 3}}), lo, hi);
  EXPECT_EQ(r, Tensor::matrix({{0.5, 0}, {0, 0}, {1, 0}}));
  EXPECT_THROW(apply_scaling(Tensor::matrix({{1, 2, 3}}), lo, hi), std::invalid_argument);
}

TEST(Subsample, FullSampleKeepsContent) {
  const auto d = labelled({4, 6});
  const auto s = subsample(d, 10, 3);
  EXPECT_EQ(s.x, d.x);
  EXPECT_EQ(s.labels, d.labels);
}

TEST(Subsample, ProportionalQuotas) {
  const auto d = labelled({50, 50});
  const auto s = subsample(d, 10, 1);
  EXPECT_EQ(std::count(s.labels.begin(), s.labels.end(), 1), 5);
  EXPECT_EQ(std::count(s.labels.begin(), s.labels.end(), 2), 5);
  // Largest remainder: 7 of (13, 29, 58) -> exact (0.91, 2.03, 4.06) -> 1, 2, 4.
  const auto u = subsample(labelled({13, 29, 58}), 7, 1);
  EXPECT_EQ(std::count(u.labels.begin(), u.labels.end(), 1), 1);
  EXPECT_EQ(std::count(u.labels.begin(), u.labels.end(), 2), 2);
  EXPECT_EQ(std::count(u.labels.begin(), u.labels.end(), 3), 4);
}

TEST(Subsample, DeterministicOrderedWithoutReplacement) {
  const auto d = labelled({30, 20, 50});
  const auto a = subsample(d, 37, 9), b = subsample(d, 37, 9);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.labels, b.labels);
  for (std::size_t i = 1; i < a.rows(); ++i) EXPECT_LT(a.x.at(i - 1, 0), a.x.at(i, 0));
  EXPECT_NE(subsample(d, 37, 10).x, a.x);
}

TEST(Subsample, Rejections) {
  const auto d = labelled({5, 5, 5});
  EXPECT_THROW(subsample(d, 16, 0), DataError);
  EXPECT_THROW(subsample(d, 2, 0), DataError);
  Dataset u;
  u.x = Tensor(Shape{5, 2});
  EXPECT_EQ(subsample(u, 2, 0).rows(), 2u);
}

TEST(Fingerprint, TracksContent) {
  auto d = labelled({3, 3});
  const auto f = fingerprint(d);
  EXPECT_EQ(fingerprint(d), f);
  d.labels[0] = 2;
  EXPECT_NE(fingerprint(d), f);
  d.labels[0] = 1;
  d.x.at(2, 0) += 1e-12;
  EXPECT_NE(fingerprint(d), f);
}
