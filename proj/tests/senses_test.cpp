#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "advlex/senses.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

using namespace advlex;

namespace {

struct Fixture {
  std::vector<AdverbOccurrence> occs;
  EmbeddingStore store;
  std::map<std::string, AdverbOccurrence> by_id;
};

std::string id_for(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "occ%03zu", i);
  return buf;
}

Fixture build(const std::vector<Vector>& vecs, const std::vector<double>& entropy = {},
              const std::vector<std::size_t>& lengths = {}, const std::string& lemma = "thus") {
  Fixture f;
  f.store = EmbeddingStore(vecs.front().size(), "test");
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    AdverbOccurrence o;
    o.occurrence_id = id_for(i);
    o.lemma = lemma;
    o.surface = lemma;
    o.token_count = lengths.empty() ? 8 : lengths[i];
    o.sentence_text = "sentence " + std::to_string(i);
    o.source = "t";
    f.occs.push_back(o);
    f.by_id[o.occurrence_id] = o;
    f.store.insert({o.occurrence_id, vecs[i], entropy.empty() ? 1.0 : entropy[i], ""});
  }
  return f;
}

oracle::Link to_oracle(Linkage l) {
  switch (l) {
    case Linkage::average: return oracle::Link::average;
    case Linkage::complete: return oracle::Link::complete;
    case Linkage::single: return oracle::Link::single;
  }
  return oracle::Link::average;
}

std::vector<std::vector<std::string>> memberships(const std::vector<SenseCluster>& cs) {
  std::vector<std::vector<std::string>> out;
  for (const auto& c : cs) out.push_back(c.member_ids);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::string>> oracle_memberships(const std::vector<Vector>& vecs,
                                                         Linkage l, double threshold,
                                                         std::size_t min_size) {
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < vecs.size(); ++i) keys.push_back(id_for(i));
  std::vector<std::vector<std::string>> out;
  for (const auto& g : oracle::brute_agglomerate(vecs, keys, to_oracle(l), threshold)) {
    if (g.size() < min_size) continue;
    std::vector<std::string> ids;
    for (auto i : g) ids.push_back(keys[i]);
    out.push_back(ids);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Vector> blob(std::mt19937_64& rng, const Vector& center, std::size_t n, double sigma) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v = center;
    for (auto& x : v) x += sigma * oracle::gaussian(rng);
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST(Cluster, TwoPlantedBlobs) {
  std::mt19937_64 rng(1);
  auto a = blob(rng, {1, 0, 0, 0}, 5, 0.05);
  auto b = blob(rng, {0, 1, 0, 0}, 5, 0.05);
  std::vector<Vector> vecs = a;
  vecs.insert(vecs.end(), b.begin(), b.end());
  auto f = build(vecs);
  ClusterParams p{0.4, 2, Linkage::average};
  auto cs = cluster_senses("thus", f.occs, f.store, p);
  ASSERT_EQ(cs.size(), 2u);
  auto m = memberships(cs);
  EXPECT_EQ(m[0], (std::vector<std::string>{"occ000", "occ001", "occ002", "occ003", "occ004"}));
  EXPECT_EQ(m[1], (std::vector<std::string>{"occ005", "occ006", "occ007", "occ008", "occ009"}));
  EXPECT_EQ(m, oracle_memberships(vecs, Linkage::average, 0.4, 2));
}

TEST(Cluster, IdenticalVectorsFormOneCluster) {
  std::vector<Vector> vecs(7, Vector{0.3, -1.2, 2.0});
  auto f = build(vecs);
  for (double t : {1e-9, 0.1, 0.4, 1.5}) {
    auto cs = cluster_senses("thus", f.occs, f.store, {t, 1, Linkage::average});
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].member_ids.size(), 7u);
  }
}

TEST(Cluster, NearOrthogonalVectorsAllDropped) {
  std::mt19937_64 rng(5);
  std::vector<Vector> vecs;
  for (std::size_t i = 0; i < 10; ++i) {
    Vector v(10, 0.0);
    v[i] = 1.0;
    for (auto& x : v) x += 0.02 * oracle::gaussian(rng);
    vecs.push_back(v);
  }
  auto f = build(vecs);
  auto res = cluster_senses_with_residual("thus", f.occs, f.store, {0.4, 2, Linkage::average});
  EXPECT_TRUE(res.clusters.empty());
  EXPECT_EQ(res.residual.size(), 10u);
  EXPECT_TRUE(oracle_memberships(vecs, Linkage::average, 0.4, 2).empty());
  EXPECT_EQ(oracle_memberships(vecs, Linkage::average, 0.4, 1).size(), 10u);
}

TEST(Cluster, MatchesBruteForceOracleOnRandomInstances) {
  for (auto linkage : {Linkage::average, Linkage::complete, Linkage::single}) {
    std::mt19937_64 rng(1000 + static_cast<int>(linkage));
    for (int trial = 0; trial < 100; ++trial) {
      std::size_t n = 2 + rng() % 11;
      std::size_t dim = 2 + rng() % 7;
      std::size_t centers = 1 + rng() % 4;
      std::vector<Vector> cs;
      for (std::size_t c = 0; c < centers; ++c) {
        Vector v(dim);
        for (auto& x : v) x = oracle::gaussian(rng);
        cs.push_back(v);
      }
      double sigma = 0.1 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
      std::vector<Vector> vecs;
      for (std::size_t i = 0; i < n; ++i) {
        Vector v = cs[rng() % centers];
        for (auto& x : v) x += sigma * oracle::gaussian(rng);
        vecs.push_back(v);
      }
      std::size_t min_size = 1 + rng() % 3;
      auto f = build(vecs);
      auto got = cluster_senses("thus", f.occs, f.store, {0.4, min_size, linkage});
      EXPECT_EQ(memberships(got), oracle_memberships(vecs, linkage, 0.4, min_size))
          << to_string(linkage) << " trial " << trial;
    }
  }
}

TEST(Cluster, RaisingThresholdNeverAddsClusters) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vector> vecs;
    for (int i = 0; i < 15; ++i) vecs.push_back({oracle::gaussian(rng), oracle::gaussian(rng), oracle::gaussian(rng)});
    std::vector<std::span<const double>> pts(vecs.begin(), vecs.end());
    std::vector<std::string> keys;
    for (int i = 0; i < 15; ++i) keys.push_back(id_for(static_cast<std::size_t>(i)));
    for (auto l : {Linkage::average, Linkage::complete, Linkage::single}) {
      std::size_t prev = 1000;
      for (double t = 0.05; t < 2.0; t += 0.05) {
        auto n = agglomerate(pts, keys, l, t).size();
        EXPECT_LE(n, prev);
        prev = n;
      }
    }
  }
}

TEST(Cluster, OutputInvariantsAndOrdering) {
  std::mt19937_64 rng(9);
  std::vector<Vector> vecs;
  auto a = blob(rng, {1, 0, 0}, 8, 0.05);
  auto b = blob(rng, {0, 1, 0}, 5, 0.05);
  auto c = blob(rng, {0, 0, 1}, 2, 0.05);
  for (auto* g : {&b, &a, &c}) vecs.insert(vecs.end(), g->begin(), g->end());
  auto f = build(vecs);
  auto res = cluster_senses_with_residual("thus", f.occs, f.store, {0.4, 3, Linkage::average});
  ASSERT_EQ(res.clusters.size(), 2u);
  EXPECT_EQ(res.clusters[0].member_ids.size(), 8u);  // larger first
  EXPECT_EQ(res.clusters[1].member_ids.size(), 5u);
  EXPECT_EQ(res.residual.size(), 2u);
  std::set<std::string> seen;
  for (const auto& cl : res.clusters) {
    EXPECT_TRUE(std::is_sorted(cl.member_ids.begin(), cl.member_ids.end()));
    EXPECT_EQ(cl.cluster_id, cluster_id_for("thus", cl.member_ids));
    std::vector<Vector> mv;
    for (const auto& id : cl.member_ids) {
      EXPECT_TRUE(seen.insert(id).second);
      mv.push_back(f.store.at(id).vector);
    }
    auto cen = centroid(mv);
    for (std::size_t i = 0; i < cen.size(); ++i) EXPECT_NEAR(cen[i], cl.centroid[i], 1e-9);
  }
  // Input order must not matter.
  auto shuffled = f.occs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto again = cluster_senses_with_residual("thus", shuffled, f.store, {0.4, 3, Linkage::average});
  EXPECT_EQ(to_jsonl(again.clusters), to_jsonl(res.clusters));
}

TEST(Cluster, MissingEmbedding) {
  auto f = build({{1, 0}, {0, 1}});
  auto occs = f.occs;
  occs.push_back(occs.back());
  occs.back().occurrence_id = "ghost";
  try {
    cluster_senses("thus", occs, f.store, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingEmbedding);
    EXPECT_EQ(e.subject(), "ghost");
  }
}

TEST(Cluster, RejectsForeignLemma) {
  auto f = build({{1, 0}, {0, 1}});
  EXPECT_THROW(cluster_senses("hence", f.occs, f.store, {}), Error);
}

TEST(Cluster, DefaultsMatchPublishedSettings) {
  ClusterParams p;
  EXPECT_DOUBLE_EQ(p.distance_threshold, 0.4);
  EXPECT_EQ(p.min_cluster_size, 100u);
  EXPECT_EQ(p.linkage, Linkage::average);
  ExampleFilter w;
  EXPECT_EQ(w.min_tokens, 3u);
  EXPECT_EQ(w.max_tokens, 20u);
}

namespace {

SenseCluster whole(const Fixture& f) {
  SenseCluster c;
  c.lemma = "thus";
  for (const auto& o : f.occs) c.member_ids.push_back(o.occurrence_id);
  c.cluster_id = cluster_id_for("thus", c.member_ids);
  return c;
}

}  // namespace

TEST(SelectExample, LowestEntropyWins) {
  auto f = build({{1, 0}, {1, 0.1}, {1, 0.2}}, {1.2, 0.5, 0.9});
  auto ex = select_example(whole(f), f.by_id, f.store, {});
  ASSERT_TRUE(ex);
  EXPECT_EQ(ex->occurrence_id, "occ001");
}

TEST(SelectExample, WindowSkipsShortSentence) {
  auto f = build({{1, 0}, {1, 0.1}, {1, 0.2}}, {0.1, 0.5, 0.9}, {2, 12, 5});
  auto ex = select_example(whole(f), f.by_id, f.store, {});
  ASSERT_TRUE(ex);
  EXPECT_EQ(ex->occurrence_id, "occ001");
}

TEST(SelectExample, NoEligibleExample) {
  auto f = build({{1, 0}, {1, 0.1}}, {0.1, 0.5}, {25, 25});
  EXPECT_FALSE(select_example(whole(f), f.by_id, f.store, {}).has_value());
}

TEST(SelectExample, InclusiveBounds) {
  auto f = build({{1, 0}, {1, 0.1}, {1, 0.2}, {1, 0.3}}, {0.1, 0.2, 0.3, 0.4}, {2, 21, 3, 20});
  ExampleFilter w;
  EXPECT_FALSE(w.admits(2));
  EXPECT_TRUE(w.admits(3));
  EXPECT_TRUE(w.admits(20));
  EXPECT_FALSE(w.admits(21));
  auto ex = select_example(whole(f), f.by_id, f.store, w);
  ASSERT_TRUE(ex);
  EXPECT_EQ(ex->occurrence_id, "occ002");
}

TEST(SelectExample, TieGoesToSmallerIdAndOrderDoesNotMatter) {
  auto f = build({{1, 0}, {1, 0.1}, {1, 0.2}, {1, 0.3}}, {0.7, 0.3, 0.3, 0.9});
  auto c = whole(f);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(c.member_ids.begin(), c.member_ids.end(), rng);
    auto ex = select_example(c, f.by_id, f.store, {});
    ASSERT_TRUE(ex);
    EXPECT_EQ(ex->occurrence_id, "occ001");
  }
}

TEST(Draft, GlossCarriesExampleAndTopSuggestion) {
  auto f = build({{1, 0}, {1, 0.1}});
  auto c = whole(f);
  std::vector<RankedCategory> suggestion = {{Category::conjunctive, 1.0}, {Category::manner, 0.2}};
  ExampleChoice ex{"it is late and thus we must go", "occ000"};
  auto e = draft_entry(c, 1, ex, suggestion);
  EXPECT_EQ(e.sense_id, "thus.r.01");
  EXPECT_EQ(e.gloss, "thus (sense 1): as in 'it is late and thus we must go'");
  EXPECT_EQ(e.category, Category::conjunctive);
  EXPECT_EQ(e.provenance, Provenance::auto_draft);
  EXPECT_FALSE(e.promotable());
  EXPECT_EQ(draft_entry(c, 1, ex, suggestion), e);
}

TEST(Draft, WithoutExampleIsNotPromotable) {
  auto f = build({{1, 0}});
  auto e = draft_entry(whole(f), 3, std::nullopt, {{Category::manner, 0.6}});
  EXPECT_EQ(e.gloss, "thus (sense 3)");
  EXPECT_FALSE(e.example);
  e.example_verified = true;
  EXPECT_FALSE(e.promotable());
}

TEST(Draft, JsonRoundTrip) {
  auto f = build({{1, 0}, {0.5, 0.5}});
  auto e = draft_entry(whole(f), 2, ExampleChoice{"a \"quoted\" one", "occ001"}, {{Category::focus, 0.2}});
  EXPECT_EQ(sense_entry_from_json(nlohmann::json::parse(to_json(e).dump())), e);
  auto c = whole(f);
  c.centroid = {0.75, 0.25};
  auto back = parse_clusters(to_jsonl(std::vector<SenseCluster>{c}));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].member_ids, c.member_ids);
  EXPECT_EQ(back[0].centroid, c.centroid);
}
