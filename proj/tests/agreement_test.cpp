#include <gtest/gtest.h>

#include <random>

#include "advlex/agreement.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

using namespace advlex;

namespace {

AnnotationSet set_of(std::string who, std::vector<std::pair<std::string, Category>> labels) {
  AnnotationSet s{std::move(who), {}};
  for (auto& [item, c] : labels) s.add(item, c);
  return s;
}

std::vector<std::vector<double>> dense(const ConfusionMatrix& m) {
  std::vector<std::vector<double>> out(kCategoryCount, std::vector<double>(kCategoryCount));
  for (std::size_t i = 0; i < kCategoryCount; ++i)
    for (std::size_t j = 0; j < kCategoryCount; ++j) out[i][j] = static_cast<double>(m.counts[i][j]);
  return out;
}

}  // namespace

TEST(Confusion, IdenticalAnnotatorsGiveDiagonal) {
  std::vector<std::pair<std::string, Category>> labels = {
      {"i1", Category::manner}, {"i2", Category::degree}, {"i3", Category::manner},
      {"i4", Category::focus}, {"i5", Category::temporal}};
  auto r = confusion(set_of("a", labels), set_of("b", labels));
  EXPECT_EQ(r.matrix.n, 5u);
  EXPECT_TRUE(r.excluded.empty());
  for (std::size_t i = 0; i < kCategoryCount; ++i)
    for (std::size_t j = 0; j < kCategoryCount; ++j)
      if (i != j) EXPECT_EQ(r.matrix.counts[i][j], 0u);
  EXPECT_EQ(r.matrix.counts[0][0], 2u);
  EXPECT_DOUBLE_EQ(cohen_kappa(r.matrix), 1.0);
}

TEST(Confusion, DisjointItemsRejected) {
  auto a = set_of("a", {{"x", Category::manner}});
  auto b = set_of("b", {{"y", Category::manner}});
  try {
    confusion(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSharedItems);
  }
}

TEST(Confusion, PartialOverlapReportsExclusions) {
  auto a = set_of("a", {{"1", Category::manner}, {"2", Category::manner}, {"3", Category::degree},
                        {"4", Category::focus}, {"5", Category::focus}});
  auto b = set_of("b", {{"1", Category::manner}, {"2", Category::degree}, {"3", Category::degree},
                        {"6", Category::focus}, {"7", Category::focus}});
  auto r = confusion(a, b);
  EXPECT_EQ(r.matrix.n, 3u);
  EXPECT_EQ(r.excluded, (std::vector<std::string>{"4", "5", "6", "7"}));
}

TEST(Kappa, HandCheckableMatrix) {
  // rows (60, 40), columns (50, 50), 80 agreements: p_o = 0.8, p_e = 0.5.
  ConfusionMatrix m;
  m.add(Category::manner, Category::manner, 45);
  m.add(Category::manner, Category::degree, 15);
  m.add(Category::degree, Category::manner, 5);
  m.add(Category::degree, Category::degree, 35);
  EXPECT_NEAR(cohen_kappa(m), 0.6, 1e-12);
  EXPECT_NEAR(oracle::kappa(dense(m)), 0.6, 1e-12);
}

TEST(Kappa, HundredItemFixtureFiles) {
  auto a = AnnotationSet::load_csv(testpaths::fixture("kappa/annotator_a_100.csv"));
  auto b = AnnotationSet::load_csv(testpaths::fixture("kappa/annotator_b_100.csv"));
  auto r = confusion(a, b);
  EXPECT_EQ(r.matrix.n, 100u);
  EXPECT_NEAR(cohen_kappa(r.matrix), 0.6, 1e-9);
}

TEST(Kappa, ReportedAgreementFixture) {
  auto a = AnnotationSet::load_csv(testpaths::fixture("kappa/annotator_a_229.csv"));
  auto b = AnnotationSet::load_csv(testpaths::fixture("kappa/annotator_b_229.csv"));
  auto r = confusion(a, b);
  EXPECT_EQ(r.matrix.n, 229u);
  double k = cohen_kappa(r.matrix);
  EXPECT_NEAR(k, oracle::kappa(dense(r.matrix)), 1e-12);
  EXPECT_NEAR(k, 0.6680872236403755, 1e-12);  // frozen from the construction script
  EXPECT_NEAR(k, 0.67, 0.005);
}

TEST(Kappa, SingleCategoryFullAgreement) {
  ConfusionMatrix m;
  m.add(Category::focus, Category::focus, 9);
  EXPECT_DOUBLE_EQ(cohen_kappa(m), 1.0);
}

TEST(Kappa, EmptyMatrixRejected) {
  EXPECT_THROW(cohen_kappa(ConfusionMatrix{}), Error);
}

TEST(Kappa, SymmetryPermutationAndPerfectAgreement) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    ConfusionMatrix m;
    bool off_diagonal = false;
    int cells = 1 + static_cast<int>(rng() % 12);
    for (int c = 0; c < cells; ++c) {
      auto i = rng() % kCategoryCount, j = rng() % kCategoryCount;
      if (trial % 5 == 0) j = i;
      auto k = 1 + rng() % 20;
      m.add(kAllCategories[i], kAllCategories[j], k);
      off_diagonal |= i != j;
    }
    double kap;
    try {
      kap = cohen_kappa(m);
    } catch (const Error&) {
      ADD_FAILURE() << "unexpected UndefinedKappa";
      continue;
    }
    EXPECT_GE(kap, -1.0);
    EXPECT_LE(kap, 1.0);
    EXPECT_NEAR(kap, cohen_kappa(m.transposed()), 1e-12);
    std::array<std::size_t, kCategoryCount> perm;
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ConfusionMatrix p;
    for (std::size_t i = 0; i < kCategoryCount; ++i)
      for (std::size_t j = 0; j < kCategoryCount; ++j)
        if (m.counts[i][j]) p.add(kAllCategories[perm[i]], kAllCategories[perm[j]], m.counts[i][j]);
    EXPECT_NEAR(kap, cohen_kappa(p), 1e-12);
    EXPECT_EQ(kap == 1.0, !off_diagonal);
  }
}

TEST(Kappa, IndependentUniformLabelingsNearZero) {
  int within = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(5000 + trial);
    ConfusionMatrix m;
    for (int i = 0; i < 10000; ++i) m.add(kAllCategories[rng() % 10], kAllCategories[rng() % 10]);
    if (std::abs(cohen_kappa(m)) < 0.05) ++within;
  }
  EXPECT_GE(within, 99);
}

TEST(AnnotationCsv, RejectsBadRows) {
  EXPECT_THROW(AnnotationSet::parse_csv("a", "x,adv.all\n"), Error);
  EXPECT_THROW(AnnotationSet::parse_csv("a", "x manner\n"), Error);
  EXPECT_THROW(AnnotationSet::parse_csv("a", "x,manner\nx,degree\n"), Error);
}
