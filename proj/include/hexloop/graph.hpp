#pragma once

#include <numeric>
#include <utility>
#include <vector>

namespace hexloop {

/// Simple undirected graph as adjacency lists.
struct Graph {
  std::vector<std::vector<int>> adj;

  Graph() = default;
  explicit Graph(int n) : adj(n) {}

  [[nodiscard]] int size() const { return static_cast<int>(adj.size()); }

  void add_edge(int u, int v) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }

  [[nodiscard]] const std::vector<int>& neighbors(int v) const { return adj[v]; }

  [[nodiscard]] std::vector<std::pair<int, int>> edge_list() const {
    std::vector<std::pair<int, int>> out;
    for (int u = 0; u < size(); ++u)
      for (int v : adj[u])
        if (u < v) out.emplace_back(u, v);
    return out;
  }
};

/// Disjoint sets with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

  bool same(int a, int b) { return find(a) == find(b); }
  int component_size(int v) { return size_[find(v)]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

}  // namespace hexloop
