#include "fdm/network.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "fdm/error.hpp"

namespace fdm {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

// Row i holds one +1 at the start vertex and one -1 at the end vertex, restricted
// to the vertices whose block position is recorded in `column` (-1 = excluded).
SparseMatrix incidence(std::span<const Index> start, std::span<const Index> end,
                       std::span<const Index> column, Index cols) {
  SparseMatrix c;
  c.rows = static_cast<Index>(start.size());
  c.cols = cols;
  c.row_offsets.reserve(start.size() + 1);
  c.col_indices.reserve(2 * start.size());
  c.values.reserve(2 * start.size());
  for (std::size_t i = 0; i < start.size(); ++i) {
    std::pair<Index, double> entries[2] = {{column[static_cast<std::size_t>(start[i])], 1.0},
                                           {column[static_cast<std::size_t>(end[i])], -1.0}};
    if (entries[1].first < entries[0].first) std::swap(entries[0], entries[1]);
    for (const auto& [col, value] : entries) {
      if (col < 0) continue;
      c.col_indices.push_back(col);
      c.values.push_back(value);
    }
    c.row_offsets.push_back(static_cast<Index>(c.col_indices.size()));
  }
  return c;
}

}  // namespace

FdmNetwork build_network(DenseMatrix vertices, std::vector<Edge> edges, std::vector<Index> supports,
                         DenseMatrix loads) {
  const std::size_t n = vertices.rows();
  if (vertices.cols() != 3)
    throw Error(ErrorCode::DimensionMismatch, "vertex coordinates must have 3 columns");
  if (loads.rows() != n || loads.cols() != 3)
    throw Error(ErrorCode::DimensionMismatch, "loads must be " + std::to_string(n) + " x 3");

  const auto in_range = [n](Index v) { return v >= 0 && static_cast<std::size_t>(v) < n; };

  std::set<std::pair<Index, Index>> seen;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [a, b] = edges[i];
    if (!in_range(a) || !in_range(b))
      throw Error(ErrorCode::IndexOutOfRange, "edge " + std::to_string(i) + " references a vertex outside [0, " +
                                                  std::to_string(n) + ")");
    if (a == b) throw Error(ErrorCode::SelfLoop, "edge " + std::to_string(i) + " connects vertex " + std::to_string(a) + " to itself");
    if (!seen.emplace(std::min(a, b), std::max(a, b)).second)
      throw Error(ErrorCode::DuplicateEdge, "edge " + std::to_string(i) + " duplicates (" + std::to_string(a) + ", " +
                                                std::to_string(b) + ")");
  }

  std::sort(supports.begin(), supports.end());
  supports.erase(std::unique(supports.begin(), supports.end()), supports.end());
  if (supports.empty()) throw Error(ErrorCode::NoSupports, "network has no supported vertices");
  for (Index s : supports)
    if (!in_range(s)) throw Error(ErrorCode::IndexOutOfRange, "support " + std::to_string(s) + " is not a vertex");

  FdmNetwork net;
  net.is_support_.assign(n, 0);
  for (Index s : supports) net.is_support_[static_cast<std::size_t>(s)] = 1;

  DisjointSets components(n);
  for (const auto& e : edges) components.unite(static_cast<std::size_t>(e.start), static_cast<std::size_t>(e.end));
  std::vector<char> anchored(n, 0);
  for (Index s : supports) anchored[components.find(static_cast<std::size_t>(s))] = 1;
  for (std::size_t v = 0; v < n; ++v) {
    if (net.is_support_[v]) continue;
    if (!anchored[components.find(v)])
      throw Error(ErrorCode::OrphanFreeComponent,
                  "free vertex " + std::to_string(v) + " belongs to a component without supports");
    net.free_.push_back(static_cast<Index>(v));
  }

  net.coordinates_ = std::move(vertices);
  net.loads_ = std::move(loads);
  net.edges_ = std::move(edges);
  net.supports_ = std::move(supports);
  return net;
}

Connectivity connectivity(const FdmNetwork& network) {
  Connectivity conn;
  const std::size_t n = network.vertex_count();
  conn.free_vertices.assign(network.free_vertices().begin(), network.free_vertices().end());
  conn.support_vertices.assign(network.supports().begin(), network.supports().end());
  conn.is_support.resize(n);
  conn.block_position.resize(n);
  for (std::size_t k = 0; k < conn.free_vertices.size(); ++k)
    conn.block_position[static_cast<std::size_t>(conn.free_vertices[k])] = static_cast<Index>(k);
  for (std::size_t k = 0; k < conn.support_vertices.size(); ++k) {
    const auto v = static_cast<std::size_t>(conn.support_vertices[k]);
    conn.block_position[v] = static_cast<Index>(k);
    conn.is_support[v] = 1;
  }

  for (const auto& e : network.edges()) {
    conn.edge_start.push_back(e.start);
    conn.edge_end.push_back(e.end);
  }

  std::vector<Index> global(n), free_col(n, -1), support_col(n, -1);
  std::iota(global.begin(), global.end(), 0);
  for (std::size_t v = 0; v < n; ++v) (conn.is_support[v] ? support_col : free_col)[v] = conn.block_position[v];

  conn.c = incidence(conn.edge_start, conn.edge_end, global, static_cast<Index>(n));
  conn.c_free = incidence(conn.edge_start, conn.edge_end, free_col, static_cast<Index>(conn.free_count()));
  conn.c_support = incidence(conn.edge_start, conn.edge_end, support_col, static_cast<Index>(conn.support_count()));
  return conn;
}

}  // namespace fdm
