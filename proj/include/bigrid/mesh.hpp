#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace bigrid {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Boundary side flags. A vertex may carry several (corners carry both sides
/// plus `corner`).
namespace tag {
inline constexpr std::uint8_t interior = 0;
inline constexpr std::uint8_t bottom = 1u << 0;
inline constexpr std::uint8_t right = 1u << 1;
inline constexpr std::uint8_t top = 1u << 2;
inline constexpr std::uint8_t left = 1u << 3;
inline constexpr std::uint8_t corner = 1u << 4;
} // namespace tag

struct Edge {
  std::array<int, 2> v{};
  Point midpoint;
  std::uint8_t tags = tag::interior;
};

/// Uniform triangulation of the unit square with n cells per side.
///
/// Vertex (i, j) sits at (i/n, j/n) and has index j*(n+1)+i. Every lattice
/// square is cut along its lower-left to upper-right diagonal, so the mesh of
/// parameter 2n refines the mesh of parameter n: each coarse triangle is the
/// union of four fine triangles.
///
/// Square (i, j) owns triangles 2*(j*n+i) (below the diagonal) and
/// 2*(j*n+i)+1 (above it). Edges are numbered horizontal first, then
/// vertical, then diagonal.
class TriMesh {
public:
  int n() const noexcept { return n_; }
  double h() const noexcept { return 1.0 / n_; }

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::uint8_t>& vertex_tags() const noexcept { return vertex_tags_; }
  /// Local edge k of a triangle joins local vertices k and (k+1)%3.
  const std::vector<std::array<int, 3>>& triangle_edges() const noexcept { return triangle_edges_; }

  int vertex_index(int i, int j) const noexcept { return j * (n_ + 1) + i; }
  double triangle_area(int t) const;

  /// Index of the coarse triangle (in a mesh of parameter n/2) containing
  /// fine triangle t. Only valid for even n.
  int parent_triangle(int t) const;

  friend TriMesh build_uniform_mesh(int n);

private:
  int n_ = 0;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::uint8_t> vertex_tags_;
  std::vector<std::array<int, 3>> triangle_edges_;
};

/// Throws InvalidParameter for n < 2.
TriMesh build_uniform_mesh(int n);

/// True iff every coarse vertex and edge midpoint is a fine vertex.
/// Throws InvalidParameter unless fine.n() == 2 * coarse.n().
bool verify_nested(const TriMesh& coarse, const TriMesh& fine);

/// VTK legacy ASCII dump of the triangulation (no point data).
void write_vtk_mesh(const TriMesh& mesh, const std::filesystem::path& path);

} // namespace bigrid
