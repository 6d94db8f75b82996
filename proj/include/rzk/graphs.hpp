#pragma once

// Graphs, permutations and directed cycles. Vertices are 0-based in memory;
// the text format and JSON use 1-based labels.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rzk/error.hpp"
#include "rzk/fq.hpp"
#include "rzk/rng.hpp"

namespace rzk::graphs {

using Vertex = int;
using Edge = std::pair<Vertex, Vertex>;

inline constexpr int kMaxEnumerationVertices = 9;
inline constexpr int kMaxSearchVertices = 12;

/// Simple undirected graph on {0, ..., n-1}.
class Graph {
 public:
  explicit Graph(int n) : n_(n) { require(n >= 1, ErrorCode::InvalidArgument, "graph needs at least one vertex"); }

  Graph(int n, const std::vector<Edge>& edges) : Graph(n) {
    for (auto [u, v] : edges) add_edge(u, v);
  }

  int size() const { return n_; }
  const std::set<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  void add_edge(Vertex u, Vertex v) {
    require(u >= 0 && u < n_ && v >= 0 && v < n_, ErrorCode::ParseError, "edge endpoint out of range");
    require(u != v, ErrorCode::ParseError, "self-loop on vertex " + std::to_string(u + 1));
    const Edge e = std::minmax(u, v);
    require(edges_.insert(e).second, ErrorCode::ParseError,
            "duplicate edge {" + std::to_string(e.first + 1) + "," + std::to_string(e.second + 1) + "}");
  }

  bool has_edge(Vertex u, Vertex v) const { return u != v && edges_.count(std::minmax(u, v)) != 0; }

  static Graph complete(int n) {
    Graph g(n);
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) g.add_edge(u, v);
    return g;
  }

  static Graph path(int n) {
    Graph g(n);
    for (int u = 0; u + 1 < n; ++u) g.add_edge(u, u + 1);
    return g;
  }

  /// Parses `n m` followed by m lines `u v` (1-based).
  static Graph parse(std::istream& in) {
    long n = 0;
    long m = 0;
    require(static_cast<bool>(in >> n >> m), ErrorCode::ParseError, "expected header `n m`");
    require(n >= 1 && m >= 0, ErrorCode::ParseError, "header values out of range");
    Graph g(static_cast<int>(n));
    for (long k = 0; k < m; ++k) {
      long u = 0;
      long v = 0;
      require(static_cast<bool>(in >> u >> v), ErrorCode::ParseError, "expected edge line " + std::to_string(k + 1));
      require(u >= 1 && u <= n && v >= 1 && v <= n, ErrorCode::ParseError, "edge endpoint out of range");
      g.add_edge(static_cast<Vertex>(u - 1), static_cast<Vertex>(v - 1));
    }
    std::string rest;
    require(!(in >> rest), ErrorCode::ParseError, "trailing content after edge list");
    return g;
  }

  static Graph parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  std::string to_text() const {
    std::ostringstream out;
    out << n_ << ' ' << edges_.size() << '\n';
    for (auto [u, v] : edges_) out << u + 1 << ' ' << v + 1 << '\n';
    return out.str();
  }

  friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

 private:
  int n_;
  std::set<Edge> edges_;
};

/// Bijection on {0, ..., n-1}.
class Permutation {
 public:
  explicit Permutation(std::vector<Vertex> mapping) : map_(std::move(mapping)) {
    std::vector<bool> seen(map_.size(), false);
    for (Vertex v : map_) {
      require(v >= 0 && static_cast<std::size_t>(v) < map_.size() && !seen[v], ErrorCode::InvalidArgument,
              "mapping is not a bijection");
      seen[v] = true;
    }
  }

  static Permutation identity(int n) {
    std::vector<Vertex> m(n);
    std::iota(m.begin(), m.end(), 0);
    return Permutation(std::move(m));
  }

  /// Fisher-Yates shuffle.
  static Permutation random(int n, SeededRng& rng) {
    std::vector<Vertex> m(n);
    std::iota(m.begin(), m.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(m[i], m[rng.uniform_below(static_cast<std::uint64_t>(i) + 1)]);
    return Permutation(std::move(m));
  }

  /// All n! permutations in lexicographic order.
  static std::vector<Permutation> all(int n) {
    std::vector<Vertex> m(n);
    std::iota(m.begin(), m.end(), 0);
    std::vector<Permutation> out;
    do {
      out.emplace_back(m);
    } while (std::next_permutation(m.begin(), m.end()));
    return out;
  }

  int size() const { return static_cast<int>(map_.size()); }
  Vertex operator()(Vertex v) const { return map_[v]; }
  const std::vector<Vertex>& mapping() const { return map_; }

  Permutation inverse() const {
    std::vector<Vertex> inv(map_.size());
    for (std::size_t i = 0; i < map_.size(); ++i) inv[map_[i]] = static_cast<Vertex>(i);
    return Permutation(std::move(inv));
  }

  /// (a * b)(v) = a(b(v)).
  friend Permutation operator*(const Permutation& a, const Permutation& b) {
    require(a.size() == b.size(), ErrorCode::SizeMismatch, "composing permutations of different sizes");
    std::vector<Vertex> m(a.map_.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = a.map_[b.map_[i]];
    return Permutation(std::move(m));
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::vector<Vertex> map_;
};

/// Directed Hamiltonian cycle v0 -> v1 -> ... -> v(n-1) -> v0, stored rotated
/// so that it starts at vertex 0. Two cycles are equal iff they have the same
/// set of directed couples; the reversed orientation is a different cycle.
class Cycle {
 public:
  explicit Cycle(std::vector<Vertex> order) : order_(std::move(order)) {
    const int n = static_cast<int>(order_.size());
    require(n >= 3, ErrorCode::InvalidArgument, "a cycle needs at least 3 vertices");
    std::vector<bool> seen(n, false);
    for (Vertex v : order_) {
      require(v >= 0 && v < n && !seen[v], ErrorCode::InvalidArgument, "cycle must visit every vertex exactly once");
      seen[v] = true;
    }
    std::rotate(order_.begin(), std::find(order_.begin(), order_.end(), 0), order_.end());
  }

  /// The cycle {(p(0),p(1)), ..., (p(n-1),p(0))} induced by a permutation.
  static Cycle from_permutation(const Permutation& p) { return Cycle(p.mapping()); }

  int size() const { return static_cast<int>(order_.size()); }
  const std::vector<Vertex>& order() const { return order_; }

  /// Directed couples (u, v) in traversal order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(order_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) out.emplace_back(order_[i], order_[(i + 1) % order_.size()]);
    return out;
  }

  friend bool operator==(const Cycle&, const Cycle&) = default;
  friend auto operator<=>(const Cycle&, const Cycle&) = default;

 private:
  std::vector<Vertex> order_;
};

inline fq::FqMatrix adjacency_matrix(const Graph& g, const fq::FieldModulus& m) {
  fq::FqMatrix out(g.size(), g.size(), m);
  for (auto [u, v] : g.edges()) {
    out.set_value(u, v, 1);
    out.set_value(v, u, 1);
  }
  return out;
}

inline Graph apply_permutation(const Permutation& p, const Graph& g) {
  require(p.size() == g.size(), ErrorCode::SizeMismatch, "permutation and graph sizes differ");
  Graph out(g.size());
  for (auto [u, v] : g.edges()) out.add_edge(p(u), p(v));
  return out;
}

inline Cycle apply_permutation(const Permutation& p, const Cycle& c) {
  require(p.size() == c.size(), ErrorCode::SizeMismatch, "permutation and cycle sizes differ");
  std::vector<Vertex> order;
  order.reserve(c.order().size());
  for (Vertex v : c.order()) order.push_back(p(v));
  return Cycle(std::move(order));
}

inline bool cycle_in_graph(const Graph& g, const Cycle& c) {
  if (c.size() != g.size()) return false;
  for (auto [u, v] : c.edges())
    if (!g.has_edge(u, v)) return false;
  return true;
}

inline int missing_edges(const Graph& g, const Cycle& c) {
  require(c.size() == g.size(), ErrorCode::SizeMismatch, "cycle and graph sizes differ");
  int missing = 0;
  for (auto [u, v] : c.edges()) missing += g.has_edge(u, v) ? 0 : 1;
  return missing;
}

/// Every directed cycle of {0..n-1}: (n-1)! of them, each starting at 0.
inline std::vector<Cycle> enumerate_cycles(int n) {
  require(n >= 3, ErrorCode::InvalidArgument, "cycles need n >= 3");
  require(n <= kMaxEnumerationVertices, ErrorCode::TooLarge, "cycle enumeration is capped at n = 9");
  std::vector<Vertex> tail(n - 1);
  std::iota(tail.begin(), tail.end(), 1);
  std::vector<Cycle> out;
  do {
    std::vector<Vertex> order{0};
    order.insert(order.end(), tail.begin(), tail.end());
    out.emplace_back(std::move(order));
  } while (std::next_permutation(tail.begin(), tail.end()));
  return out;
}

inline Cycle random_cycle(int n, SeededRng& rng) { return Cycle::from_permutation(Permutation::random(n, rng)); }

namespace detail {

inline bool extend_path(const Graph& g, std::vector<Vertex>& path, std::vector<bool>& used) {
  const int n = g.size();
  if (static_cast<int>(path.size()) == n) return g.has_edge(path.back(), path.front());
  for (Vertex next = 0; next < n; ++next) {
    if (used[next] || !g.has_edge(path.back(), next)) continue;
    used[next] = true;
    path.push_back(next);
    if (extend_path(g, path, used)) return true;
    path.pop_back();
    used[next] = false;
  }
  return false;
}

}  // namespace detail

/// Backtracking search from vertex 0.
inline std::optional<Cycle> find_hamiltonian_cycle(const Graph& g) {
  require(g.size() <= kMaxSearchVertices, ErrorCode::TooLarge, "Hamiltonian search is capped at n = 12");
  if (g.size() < 3) return std::nullopt;
  std::vector<Vertex> path{0};
  std::vector<bool> used(g.size(), false);
  used[0] = true;
  if (!detail::extend_path(g, path, used)) return std::nullopt;
  return Cycle(std::move(path));
}

/// Fewest non-edges any cycle of {0..n-1} must traverse; 0 iff Hamiltonian.
inline int min_missing_edges(const Graph& g) {
  require(g.size() <= kMaxEnumerationVertices, ErrorCode::TooLarge, "min_missing_edges is capped at n = 9");
  int best = g.size();
  for (const Cycle& c : enumerate_cycles(g.size())) best = std::min(best, missing_edges(g, c));
  return best;
}

/// A cycle achieving min_missing_edges.
inline Cycle closest_cycle(const Graph& g) {
  require(g.size() <= kMaxEnumerationVertices, ErrorCode::TooLarge, "closest_cycle is capped at n = 9");
  std::optional<Cycle> best;
  int best_missing = g.size() + 1;
  for (const Cycle& c : enumerate_cycles(g.size())) {
    const int m = missing_edges(g, c);
    if (m < best_missing) {
      best_missing = m;
      best = c;
    }
  }
  return *best;
}

}  // namespace rzk::graphs
