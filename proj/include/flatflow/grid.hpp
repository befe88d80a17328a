#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace flatflow {

enum class Boundary { Neumann, Periodic };

template <typename Scalar>
using Field = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MaskArray = Field<std::uint8_t>;
using Index = Eigen::Index;

/// Uniform two-dimensional cell lattice. Rows run along y, columns along x;
/// cell (iy, ix) has its center at ((ix + 1/2) dx, (iy + 1/2) dx).
class GridDomain {
 public:
  GridDomain(Index nx, Index ny, double dx, Boundary bc = Boundary::Neumann);

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  Index cells() const { return nx_ * ny_; }
  double dx() const { return dx_; }
  Boundary boundary() const { return bc_; }
  static constexpr int dimension = 2;

  double cell_volume() const { return dx_ * dx_; }
  double face_area() const { return dx_; }
  double width() const { return static_cast<double>(nx_) * dx_; }
  double height() const { return static_cast<double>(ny_) * dx_; }
  double diameter() const;

  Index id(Index iy, Index ix) const { return iy * nx_ + ix; }
  double center_x(Index ix) const { return (static_cast<double>(ix) + 0.5) * dx_; }
  double center_y(Index iy) const { return (static_cast<double>(iy) + 0.5) * dx_; }

  bool operator==(const GridDomain& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && dx_ == o.dx_ && bc_ == o.bc_;
  }
  bool operator!=(const GridDomain& o) const { return !(*this == o); }

 private:
  Index nx_;
  Index ny_;
  double dx_;
  Boundary bc_;
};

/// Throws DomainError when the two domains differ.
void require_same_domain(const GridDomain& a, const GridDomain& b, const char* what);

/// Half-open cell box [x0, x1) x [y0, y1).
struct CellBox {
  Index x0 = 0;
  Index y0 = 0;
  Index x1 = 0;
  Index y1 = 0;

  bool contains(Index iy, Index ix) const { return ix >= x0 && ix < x1 && iy >= y0 && iy < y1; }
  bool contains(const CellBox& o) const {
    return o.x0 >= x0 && o.x1 <= x1 && o.y0 >= y0 && o.y1 <= y1;
  }
};

/// Union of closed cells; the discrete set of finite perimeter.
class BinarySet {
 public:
  explicit BinarySet(const GridDomain& domain);
  BinarySet(const GridDomain& domain, MaskArray mask);

  const GridDomain& domain() const { return domain_; }
  const MaskArray& mask() const { return mask_; }
  bool operator()(Index iy, Index ix) const { return mask_(iy, ix) != 0; }
  bool at(Index id) const { return mask_.data()[id] != 0; }

  Index count() const;
  bool empty() const { return count() == 0; }
  bool full() const { return count() == domain_.cells(); }
  BinarySet complement() const;

  bool operator==(const BinarySet& o) const {
    return domain_ == o.domain_ && (mask_ == o.mask_).all();
  }
  bool operator!=(const BinarySet& o) const { return !(*this == o); }

 private:
  GridDomain domain_;
  MaskArray mask_;
};

/// Real value per cell, finite everywhere.
class ScalarField {
 public:
  explicit ScalarField(const GridDomain& domain, double fill = 0.0);
  ScalarField(const GridDomain& domain, Field<double> values);

  const GridDomain& domain() const { return domain_; }
  const Field<double>& values() const { return values_; }
  double operator()(Index iy, Index ix) const { return values_(iy, ix); }
  double at(Index id) const { return values_.data()[id]; }

 private:
  GridDomain domain_;
  Field<double> values_;
};

BinarySet indicator_union(const BinarySet& a, const BinarySet& b);
BinarySet indicator_intersection(const BinarySet& a, const BinarySet& b);

double volume(const BinarySet& s);
double sym_diff_volume(const BinarySet& a, const BinarySet& b);
Index sym_diff_cells(const BinarySet& a, const BinarySet& b);

/// 64-bit FNV-1a over dimensions, spacing and mask bytes.
std::uint64_t fingerprint(const BinarySet& s);

/// Shift by whole cells; cells shifted off the box are dropped.
BinarySet translated(const BinarySet& s, Index dy, Index dx);
/// Quarter turn counter-clockwise; requires a square grid.
BinarySet rotated90(const BinarySet& s);

// Mask files: a one-line text header followed by one text row of '0'/'1' per
// grid row (row-major). Field dumps share the header and carry raw little-endian
// doubles.
void save_mask(const BinarySet& s, const std::filesystem::path& path);
BinarySet load_mask(const std::filesystem::path& path, int expected_dimension = 2);
void save_pgm(const BinarySet& s, const std::filesystem::path& path);
void save_field_raw(const ScalarField& f, const std::filesystem::path& path);
ScalarField load_field_raw(const std::filesystem::path& path);

}  // namespace flatflow
