#pragma once

#include <span>
#include <vector>

#include "fdm/matrix.hpp"
#include "fdm/sparse.hpp"

namespace fdm {

struct Edge {
  Index start;
  Index end;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Pin-jointed bar network: a fixed graph, its support partition, reference
/// coordinates and applied loads. Immutable once built.
class FdmNetwork {
 public:
  std::size_t vertex_count() const noexcept { return coordinates_.rows(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t support_count() const noexcept { return supports_.size(); }
  std::size_t free_count() const noexcept { return free_.size(); }

  std::span<const Edge> edges() const noexcept { return edges_; }
  /// Support vertex ids, ascending.
  std::span<const Index> supports() const noexcept { return supports_; }
  /// Free vertex ids, ascending.
  std::span<const Index> free_vertices() const noexcept { return free_; }
  bool is_support(Index v) const { return is_support_[static_cast<std::size_t>(v)] != 0; }

  const DenseMatrix& coordinates() const noexcept { return coordinates_; }
  const DenseMatrix& loads() const noexcept { return loads_; }

  friend bool operator==(const FdmNetwork&, const FdmNetwork&) = default;

 private:
  friend FdmNetwork build_network(DenseMatrix, std::vector<Edge>, std::vector<Index>, DenseMatrix);

  DenseMatrix coordinates_;
  DenseMatrix loads_;
  std::vector<Edge> edges_;
  std::vector<Index> supports_;
  std::vector<Index> free_;
  std::vector<char> is_support_;
};

/// Validates and builds a network. `vertices` and `loads` are n x 3.
/// Throws Error with SelfLoop, DuplicateEdge, NoSupports, OrphanFreeComponent,
/// IndexOutOfRange or DimensionMismatch.
FdmNetwork build_network(DenseMatrix vertices, std::vector<Edge> edges, std::vector<Index> supports,
                         DenseMatrix loads);

/// Signed incidence matrix C (+1 at the start vertex, -1 at the end vertex) and
/// its column blocks for free and supported vertices.
struct Connectivity {
  SparseMatrix c;
  SparseMatrix c_free;
  SparseMatrix c_support;

  std::vector<Index> free_vertices;     // column of c_free -> vertex id
  std::vector<Index> support_vertices;  // column of c_support -> vertex id
  std::vector<Index> block_position;    // vertex id -> column within its block
  std::vector<char> is_support;

  std::vector<Index> edge_start;
  std::vector<Index> edge_end;

  std::size_t edge_count() const noexcept { return edge_start.size(); }
  std::size_t vertex_count() const noexcept { return block_position.size(); }
  std::size_t free_count() const noexcept { return free_vertices.size(); }
  std::size_t support_count() const noexcept { return support_vertices.size(); }
};

Connectivity connectivity(const FdmNetwork& network);

}  // namespace fdm
