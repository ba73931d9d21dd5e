#include <gtest/gtest.h>

#include <cmath>

#include "hexloop/arms.hpp"
#include "hexloop/hex_patch.hpp"

using namespace hexloop;

namespace {

struct Host {
  HexPatch patch;
  PlanarGraph planar;
  FaceTrace faces;
  Graph graph;
  CutSet cut;
  std::vector<int> outer;

  Host(int m, int n) : patch(HexPatch::ball(m)), planar(patch.triangular_planar()), faces(trace_faces(planar)) {
    graph = planar.adjacency();
    cut = cut_set(planar, faces, patch.face_id({0, 0}), n);
    outer = outer_boundary(planar, faces);
  }

  // Alternating angular sectors around the origin; sector 0 open.
  [[nodiscard]] SiteConfig sectors(int count) const {
    SiteConfig s(graph.size());
    for (int v = 0; v < graph.size(); ++v) {
      const auto pos = HexPatch::face_position(patch.face(v));
      double a = std::atan2(static_cast<double>(pos[1]) * std::sqrt(3.0), static_cast<double>(pos[0]));
      if (a < 0) a += 2 * M_PI;
      s[v] = static_cast<int>(a / (2 * M_PI) * count) % 2 == 0;
    }
    return s;
  }
};

}  // namespace

TEST(EstimatePij, DegenerateSamplers) {
  const Host h(6, 2);
  const int l = h.cut.size();
  auto all_open = [&](CounterRng&) { return SiteConfig(h.graph.size(), 1); };
  auto all_closed = [&](CounterRng&) { return SiteConfig(h.graph.size(), 0); };
  const auto t1 = estimate_pij(h.graph, h.cut, h.outer, all_open, 10, 1);
  const auto t0 = estimate_pij(h.graph, h.cut, h.outer, all_closed, 10, 1);
  for (int i = 1; i <= l; ++i)
    for (int j = i; j <= l; ++j) {
      EXPECT_EQ(t1.p(i, j), 0.0);
      EXPECT_EQ(t0.p(i, j), 1.0);
    }
  const auto split = iterated_split(t1, h.cut.cut, 0.1, 2);
  EXPECT_EQ(split.splits, (std::vector<int>{1, 2, 3, 4}));
  EXPECT_THROW(iterated_split(t0, h.cut.cut, 0.1, 1), PreconditionError);
}

TEST(EstimatePij, BernoulliSingleVertexArc) {
  const Host h(8, 2);
  auto bern = [&](CounterRng& rng) { return bernoulli_sites(h.graph.size(), 0.5, rng); };
  const auto t = estimate_pij(h.graph, h.cut, h.outer, bern, 4000, 3);
  for (int i = 1; i <= t.length(); ++i) EXPECT_GE(t.p(i, i), 0.5);
  for (int i = 2; i <= t.length(); ++i) EXPECT_LE(t.p(1, i), t.p(1, i - 1));
  EXPECT_GT(t.standard_error(1, 1), 0.0);
}

TEST(ArcSplit, Examples) {
  const auto a = arc_split({0.9, 0.5, 0.05}, 0.02);
  EXPECT_EQ(a.index, 3);
  EXPECT_FALSE(a.premise);
  const auto b = arc_split({0.01}, 0.02);
  EXPECT_EQ(b.index, 1);
  EXPECT_TRUE(b.premise);
  EXPECT_THROW(arc_split({0.9, 0.9}, 0.02), PreconditionError);
}

TEST(IteratedSplit, TwoVertexExample) {
  const auto t = PijTable::from_values(2, {{0.001, 0.0}, {0.0, 0.001}});
  const auto d = iterated_split(t, {7, 9}, 0.1, 1);
  EXPECT_EQ(d.splits, (std::vector<int>{1, 2}));
  EXPECT_EQ(d.arc(1), std::vector<int>{9});
  EXPECT_EQ(d.arc(0), std::vector<int>{7});
}

TEST(ArcDecompositionTest, ArcsPartitionCyclically) {
  const ArcDecomposition d({10, 11, 12, 13, 14, 15}, {2, 3, 5, 6});
  EXPECT_EQ(d.arc(0), (std::vector<int>{10, 11}));
  EXPECT_EQ(d.arc(1), (std::vector<int>{12}));
  EXPECT_EQ(d.arc(2), (std::vector<int>{13, 14}));
  EXPECT_EQ(d.arc(3), (std::vector<int>{15}));
  const ArcDecomposition w({10, 11, 12, 13}, {1, 3});
  EXPECT_EQ(w.arc(0), (std::vector<int>{13, 10}));
  EXPECT_THROW(ArcDecomposition({1, 2}, {2, 1}), StructuralError);
  EXPECT_THROW(ArcDecomposition({1, 2}, {0, 1}), StructuralError);
}

TEST(ArmEvent, Examples) {
  const Host h(8, 2);
  const SiteConfig open(h.graph.size(), 1);
  const ArcDecomposition any(h.cut.cut, {3, 6, 9, 12});
  EXPECT_FALSE(arm_event(h.graph, open, h.cut, any, h.outer));

  const auto sec = h.sectors(4);
  const auto arcs = find_arm_arcs(h.graph, sec, sec, h.cut, h.outer, 2);
  ASSERT_TRUE(arcs.has_value());
  EXPECT_TRUE(arm_event(h.graph, sec, h.cut, *arcs, h.outer));

  CounterRng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const auto s = bernoulli_sites(h.graph.size(), 0.5, rng);
    EXPECT_EQ(arm_event(h.graph, s, h.cut, any, h.outer), arm_event(h.graph, complement(s), h.cut, any, h.outer));
  }
}

TEST(CrossingComponents, Examples) {
  const Host h(8, 2);
  const SiteConfig open(h.graph.size(), 1);
  EXPECT_EQ(crossing_components(h.graph, open, h.cut.cut, h.outer, 1), 1);
  EXPECT_EQ(crossing_components(h.graph, open, h.cut.cut, h.outer, 0), 0);
  // Three radial strips separated by closed wedges and a closed centre.
  auto strips = h.sectors(6);
  for (int v : h.cut.ball.vertices)
    if (h.cut.ball.distance[v] < 2) strips[v] = 0;
  EXPECT_EQ(crossing_components(h.graph, strips, h.cut.cut, h.outer, 1), 3);
  EXPECT_EQ(crossing_components(h.graph, strips, h.cut.cut, h.outer, 0), 1);
}

TEST(CrossingComponents, ClosingOneVertexBoundedChange) {
  const Host h(7, 2);
  CounterRng rng(8);
  for (int t = 0; t < 2000; ++t) {
    auto s = bernoulli_sites(h.graph.size(), 0.55, rng);
    const int v = static_cast<int>(rng.below(h.graph.size()));
    const int before = crossing_components(h.graph, s, h.cut.cut, h.outer, 1);
    s[v] = 0;
    const int after = crossing_components(h.graph, s, h.cut.cut, h.outer, 1);
    const int deg = static_cast<int>(h.graph.neighbors(v).size());
    EXPECT_LE(std::abs(after - before), std::max(1, deg - 1));
  }
}

TEST(Catalan, Examples) {
  const Host h(8, 3);
  const auto two = h.sectors(2);
  const auto a1 = find_arm_arcs(h.graph, two, two, h.cut, h.outer, 1);
  ASSERT_TRUE(a1.has_value());
  const auto r1 = catalan_check(h.graph, two, two, h.cut, *a1, h.outer);
  EXPECT_EQ(r1.c_open, 1);
  EXPECT_EQ(r1.c_closed, 1);
  EXPECT_TRUE(r1.ok());

  const auto six = h.sectors(6);
  const auto a3 = find_arm_arcs(h.graph, six, six, h.cut, h.outer, 3);
  ASSERT_TRUE(a3.has_value());
  const auto r3 = catalan_check(h.graph, six, six, h.cut, *a3, h.outer);
  EXPECT_GE(r3.c_open + r3.c_closed, 4);
  EXPECT_TRUE(r3.ok());

  SiteConfig bigger = six;
  bigger[0] = 1;
  SiteConfig smaller = six;
  for (auto& b : smaller) b = 0;
  EXPECT_THROW(catalan_check(h.graph, six, smaller, h.cut, *a3, h.outer), PreconditionError);
  const SiteConfig open(h.graph.size(), 1);
  EXPECT_THROW(catalan_check(h.graph, open, open, h.cut, *a3, h.outer), PreconditionError);
}

TEST(Catalan, RejectionSampledPairs) {
  const Host h(8, 3);
  CounterRng rng(21);
  int accepted = 0;
  for (int t = 0; t < 20000; ++t) {
    const double p = 0.3 + 0.2 * rng.uniform01();
    auto [s, tau] = monotone_coupling(h.graph.size(), p, rng);
    for (int k = 1; k <= 3; ++k) {
      const auto arcs = find_arm_arcs(h.graph, s, tau, h.cut, h.outer, k);
      if (!arcs) break;
      ++accepted;
      EXPECT_TRUE(catalan_check(h.graph, s, tau, h.cut, *arcs, h.outer).ok());
    }
  }
  EXPECT_GT(accepted, 1000);
}
