#pragma once

// Problem definitions shared by every module: stencil specifications, grid
// buffers with their storage layouts, and flop accounting.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <new>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tstencil {

/// Largest order any vector kernel supports (presets top out at r = 2).
inline constexpr int kMaxOrder = 2;

/// Bytes of alignment for every grid allocation (one AVX-512 register).
inline constexpr std::size_t kGridAlignment = 64;

enum class Shape { star, box };

/// Offset of a stencil tap; component 0 is the unit-stride (x) dimension.
using Offset = std::array<int, 3>;

struct Tap {
  Offset offset{};
  double weight = 0.0;
};

struct StencilSpec {
  std::string name;
  int dim = 1;
  int order = 1;
  Shape shape = Shape::star;
  /// Sorted by (z, y, x) offset; every method accumulates in this order.
  std::vector<Tap> weights;
};

/// One of the six benchmark presets: 1d3p 1d5p 2d5p 2d9p 3d7p 3d27p.
StencilSpec make_stencil_spec(std::string_view name);

/// Names accepted by make_stencil_spec.
const std::vector<std::string>& preset_names();

/// Multiplies plus adds of one point update: 2 * |weights| - 1.
int flops_per_point(const StencilSpec& spec);

/// Taps that read the same input row (same y/z offset), in accumulation
/// order. Vector kernels treat each group as one unit-stride stream.
struct RowGroup {
  int dy = 0;
  int dz = 0;
  int reach_left = 0;   // max(-dx, 0) over the group's taps
  int reach_right = 0;  // max(dx, 0)
  std::vector<std::pair<int, double>> taps;  // (dx, weight), ascending dx
};

std::vector<RowGroup> row_groups(const StencilSpec& spec);

enum class LayoutKind { natural, block_transpose, dlt };

struct Layout {
  LayoutKind kind = LayoutKind::natural;
  int vl = 0;  // unused for natural

  static constexpr Layout natural() { return {LayoutKind::natural, 0}; }
  static constexpr Layout block_transpose(int vl) { return {LayoutKind::block_transpose, vl}; }
  static constexpr Layout dlt(int vl) { return {LayoutKind::dlt, vl}; }

  friend bool operator==(const Layout&, const Layout&) = default;
};

std::string to_string(LayoutKind kind);
std::string to_string(const Layout& layout);

template <class T, std::size_t Align>
struct AlignedAllocator {
  using value_type = T;
  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };
  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) noexcept {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{Align}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{Align}); }
  template <class U>
  bool operator==(const AlignedAllocator<U, Align>&) const noexcept {
    return true;
  }
};

using AlignedVector = std::vector<double, AlignedAllocator<double, kGridAlignment>>;

/// Interior extents (x, y, z); x is the unit-stride dimension. Unused
/// dimensions have extent 1.
using Extents = std::array<std::size_t, 3>;

/// A d-dimensional double grid with ghost cells.
///
/// Coordinates are signed: interior x in [0, n_x), halo x in [-halo_x, 0)
/// and [padded_x, padded_x + halo_x). Cells in [n_x, padded_x) are padding
/// that rounds the unit-stride extent up to whole vl*vl blocks; they carry
/// boundary values and are never written by a step.
///
/// Storage is row-major with x fastest. The layout only permutes positions
/// inside [0, padded_x) of every row (halo rows included); x-halo cells are
/// always stored in natural order.
class GridBuffer {
 public:
  GridBuffer() = default;
  GridBuffer(int dim, Extents interior, std::size_t padded_x, std::array<int, 3> halo, Layout layout);

  int dim() const { return dim_; }
  const Extents& extents() const { return n_; }
  std::size_t padded_x() const { return padded_x_; }
  const std::array<int, 3>& halo() const { return halo_; }
  const Layout& layout() const { return layout_; }
  void set_layout(Layout layout) { layout_ = layout; }

  /// Number of interior points (excluding padding).
  std::size_t interior_points() const { return n_[0] * n_[1] * n_[2]; }

  std::ptrdiff_t row_stride() const { return row_stride_; }

  /// Pointer to x = 0 of row (y, z); y and z may index halo rows.
  double* row(std::ptrdiff_t y, std::ptrdiff_t z) { return data_.data() + row_offset(y, z); }
  const double* row(std::ptrdiff_t y, std::ptrdiff_t z) const { return data_.data() + row_offset(y, z); }

  /// Storage position within a row of natural coordinate x.
  std::ptrdiff_t position(std::ptrdiff_t x) const;

  /// Layout-aware element access by natural coordinates.
  double get(std::ptrdiff_t x, std::ptrdiff_t y = 0, std::ptrdiff_t z = 0) const {
    return row(y, z)[position(x)];
  }
  void set(std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z, double v) { row(y, z)[position(x)] = v; }

  /// Whether (x, y, z) lies outside the interior (halo or padding).
  bool is_boundary(std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) const;

  /// Ranges of row indices including halo rows.
  std::ptrdiff_t y_begin() const { return -halo_[1]; }
  std::ptrdiff_t y_end() const { return static_cast<std::ptrdiff_t>(n_[1]) + halo_[1]; }
  std::ptrdiff_t z_begin() const { return -halo_[2]; }
  std::ptrdiff_t z_end() const { return static_cast<std::ptrdiff_t>(n_[2]) + halo_[2]; }

  /// First and one-past-last natural x stored in a row.
  std::ptrdiff_t x_begin() const { return -halo_[0]; }
  std::ptrdiff_t x_end() const { return static_cast<std::ptrdiff_t>(padded_x_) + halo_[0]; }

  AlignedVector& raw() { return data_; }
  const AlignedVector& raw() const { return data_; }

  bool same_shape(const GridBuffer& other) const;

 private:
  std::ptrdiff_t row_offset(std::ptrdiff_t y, std::ptrdiff_t z) const {
    return ((z + halo_[2]) * rows_per_plane_ + (y + halo_[1])) * row_stride_ + lead_;
  }

  int dim_ = 0;
  Extents n_{1, 1, 1};
  std::size_t padded_x_ = 0;
  std::array<int, 3> halo_{0, 0, 0};
  Layout layout_{};
  std::ptrdiff_t lead_ = 0;
  std::ptrdiff_t row_stride_ = 0;
  std::ptrdiff_t rows_per_plane_ = 0;
  AlignedVector data_;
};

/// A vl x vl block of the unit-stride dimension held as vl row vectors
/// after the local transpose: row j, lane l holds natural element
/// base + l * vl + j.
struct VectorSet {
  int vl = 0;
  std::size_t base = 0;
  std::vector<double> rows;  // row-major, rows[j * vl + l]

  VectorSet() = default;
  VectorSet(int vl_, std::size_t base_) : vl(vl_), base(base_), rows(static_cast<std::size_t>(vl_ * vl_), 0.0) {}

  double& at(int j, int l) { return rows[static_cast<std::size_t>(j * vl + l)]; }
  double at(int j, int l) const { return rows[static_cast<std::size_t>(j * vl + l)]; }
  std::vector<double> row(int j) const {
    return {rows.begin() + j * vl, rows.begin() + (j + 1) * vl};
  }
  friend bool operator==(const VectorSet&, const VectorSet&) = default;
};

/// Reads block `block` of row (y, z) of a BlockTranspose grid as stored.
VectorSet load_vector_set(const GridBuffer& grid, std::size_t block, std::ptrdiff_t y = 0, std::ptrdiff_t z = 0);

/// Operation meters recorded by the kernels. Vector loads/stores count
/// whole-vector memory instructions on grid data; scalar loads count halo
/// and edge values fetched one element at a time; reorg_ops counts
/// register data-movement instructions used to form neighbour vectors.
struct Counters {
  std::uint64_t vector_loads = 0;
  std::uint64_t vector_stores = 0;
  std::uint64_t scalar_loads = 0;
  std::uint64_t scalar_stores = 0;
  std::uint64_t reorg_ops = 0;
  std::uint64_t assembled_vectors = 0;
  std::uint64_t point_updates = 0;
  std::uint64_t vs_loads = 0;   // whole VectorSet loads (jam pipeline)
  std::uint64_t vs_stores = 0;  // whole VectorSet stores (jam pipeline)

  Counters& operator+=(const Counters& o) {
    vector_loads += o.vector_loads;
    vector_stores += o.vector_stores;
    scalar_loads += o.scalar_loads;
    scalar_stores += o.scalar_stores;
    reorg_ops += o.reorg_ops;
    assembled_vectors += o.assembled_vectors;
    point_updates += o.point_updates;
    vs_loads += o.vs_loads;
    vs_stores += o.vs_stores;
    return *this;
  }
  friend bool operator==(const Counters&, const Counters&) = default;
};

/// Allocates a zero-filled grid for `spec`. The x halo is 2r wide (room for
/// two jammed time levels), y/z halos are r wide. BlockTranspose pads the
/// unit-stride extent to a multiple of vl*vl; DLT requires n_x % vl == 0.
GridBuffer alloc_grid(const StencilSpec& spec, Extents dims, Layout layout, int vl);

/// Same geometry as `like` but with the unit-stride extent padded to
/// `padded_x` (>= like.padded_x()) and natural layout.
GridBuffer alloc_like(const GridBuffer& like, std::size_t padded_x, Layout layout);

/// Copies every halo and padding cell from src to dst (same shape and layout).
void copy_boundary(const GridBuffer& src, GridBuffer& dst);

/// Maximum |a - b| / max(|b|, tiny) over interior points (natural coordinates).
double max_relative_error(const GridBuffer& a, const GridBuffer& reference);

/// Deterministic uniform(0, 1) fill of interior and boundary cells.
void seed_uniform(GridBuffer& grid, std::uint64_t seed);

/// Extents with unused dimensions set to 1, validated for `dim`.
Extents make_extents(int dim, const std::vector<std::size_t>& sizes);

}  // namespace tstencil
