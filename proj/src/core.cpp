#include "tstencil/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <tuple>

namespace tstencil {

namespace {

// Binomial row (1, 2, 1) or (1, 4, 6, 4, 1), used for box and 1D weights.
std::vector<double> binomial(int r) {
  std::vector<double> row{1.0};
  for (int i = 0; i < 2 * r; ++i) {
    std::vector<double> next(row.size() + 1, 0.0);
    for (std::size_t k = 0; k < row.size(); ++k) {
      next[k] += row[k];
      next[k + 1] += row[k];
    }
    row = std::move(next);
  }
  return row;
}

StencilSpec star(std::string name, int dim, int r, double centre, double arm) {
  StencilSpec s{std::move(name), dim, r, Shape::star, {}};
  s.weights.push_back({{0, 0, 0}, centre});
  for (int axis = 0; axis < dim; ++axis) {
    for (int k = 1; k <= r; ++k) {
      Offset lo{0, 0, 0}, hi{0, 0, 0};
      lo[axis] = -k;
      hi[axis] = k;
      s.weights.push_back({lo, arm});
      s.weights.push_back({hi, arm});
    }
  }
  return s;
}

StencilSpec box(std::string name, int dim, int r) {
  StencilSpec s{std::move(name), dim, r, Shape::box, {}};
  const auto b = binomial(r);
  double total = 1.0;
  for (int i = 0; i < dim; ++i) total *= std::pow(2.0, 2 * r);
  const int zr = dim >= 3 ? r : 0;
  const int yr = dim >= 2 ? r : 0;
  for (int z = -zr; z <= zr; ++z)
    for (int y = -yr; y <= yr; ++y)
      for (int x = -r; x <= r; ++x) {
        double w = b[x + r];
        if (dim >= 2) w *= b[y + r];
        if (dim >= 3) w *= b[z + r];
        s.weights.push_back({{x, y, z}, w / total});
      }
  return s;
}

void canonicalize(StencilSpec& s) {
  std::sort(s.weights.begin(), s.weights.end(), [](const Tap& a, const Tap& b) {
    return std::tie(a.offset[2], a.offset[1], a.offset[0]) < std::tie(b.offset[2], b.offset[1], b.offset[0]);
  });
}

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"1d3p", "1d5p", "2d5p", "2d9p", "3d7p", "3d27p"};
  return names;
}

StencilSpec make_stencil_spec(std::string_view name) {
  StencilSpec s;
  if (name == "1d3p") {
    s = star("1d3p", 1, 1, 0.5, 0.25);
  } else if (name == "1d5p") {
    // binomial (1 4 6 4 1) / 16
    s = StencilSpec{"1d5p", 1, 2, Shape::star,
                    {{{-2, 0, 0}, 1.0 / 16}, {{-1, 0, 0}, 4.0 / 16}, {{0, 0, 0}, 6.0 / 16},
                     {{1, 0, 0}, 4.0 / 16}, {{2, 0, 0}, 1.0 / 16}}};
  } else if (name == "2d5p") {
    s = star("2d5p", 2, 1, 0.5, 0.125);
  } else if (name == "2d9p") {
    s = box("2d9p", 2, 1);
  } else if (name == "3d7p") {
    s = star("3d7p", 3, 1, 0.25, 0.125);
  } else if (name == "3d27p") {
    s = box("3d27p", 3, 1);
  } else {
    throw std::invalid_argument("unknown stencil preset '" + std::string(name) + "'");
  }
  canonicalize(s);
  return s;
}

int flops_per_point(const StencilSpec& spec) { return 2 * static_cast<int>(spec.weights.size()) - 1; }

std::vector<RowGroup> row_groups(const StencilSpec& spec) {
  std::vector<RowGroup> groups;
  for (const Tap& t : spec.weights) {
    const int dx = t.offset[0], dy = t.offset[1], dz = t.offset[2];
    if (groups.empty() || groups.back().dy != dy || groups.back().dz != dz) {
      groups.push_back(RowGroup{dy, dz, 0, 0, {}});
    }
    RowGroup& g = groups.back();
    g.taps.emplace_back(dx, t.weight);
    g.reach_left = std::max(g.reach_left, -dx);
    g.reach_right = std::max(g.reach_right, dx);
  }
  return groups;
}

std::string to_string(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::natural: return "natural";
    case LayoutKind::block_transpose: return "block_transpose";
    case LayoutKind::dlt: return "dlt";
  }
  return "?";
}

std::string to_string(const Layout& layout) {
  if (layout.kind == LayoutKind::natural) return "natural";
  return to_string(layout.kind) + "(" + std::to_string(layout.vl) + ")";
}

GridBuffer::GridBuffer(int dim, Extents interior, std::size_t padded_x, std::array<int, 3> halo, Layout layout)
    : dim_(dim), n_(interior), padded_x_(padded_x), halo_(halo), layout_(layout) {
  // x = 0 of every row lands on a 64-byte boundary: the leading halo is
  // rounded up to 8 doubles and so is the row stride.
  lead_ = static_cast<std::ptrdiff_t>(round_up(static_cast<std::size_t>(halo_[0]), 8));
  row_stride_ = lead_ + static_cast<std::ptrdiff_t>(round_up(padded_x_ + halo_[0], 8));
  rows_per_plane_ = static_cast<std::ptrdiff_t>(n_[1]) + 2 * halo_[1];
  const std::size_t planes = n_[2] + 2 * static_cast<std::size_t>(halo_[2]);
  const std::size_t total = static_cast<std::size_t>(row_stride_) * static_cast<std::size_t>(rows_per_plane_) * planes;
  data_.assign(total, 0.0);
}

std::ptrdiff_t GridBuffer::position(std::ptrdiff_t x) const {
  if (x < 0 || x >= static_cast<std::ptrdiff_t>(padded_x_)) return x;
  switch (layout_.kind) {
    case LayoutKind::natural:
      return x;
    case LayoutKind::block_transpose: {
      const std::ptrdiff_t vl = layout_.vl;
      const std::ptrdiff_t block = vl * vl;
      const std::ptrdiff_t o = x % block;
      return x - o + (o % vl) * vl + o / vl;
    }
    case LayoutKind::dlt: {
      const std::ptrdiff_t vl = layout_.vl;
      const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(padded_x_) / vl;
      return (x % m) * vl + x / m;
    }
  }
  return x;
}

bool GridBuffer::is_boundary(std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) const {
  return x < 0 || x >= static_cast<std::ptrdiff_t>(n_[0]) || y < 0 || y >= static_cast<std::ptrdiff_t>(n_[1]) ||
         z < 0 || z >= static_cast<std::ptrdiff_t>(n_[2]);
}

bool GridBuffer::same_shape(const GridBuffer& o) const {
  return dim_ == o.dim_ && n_ == o.n_ && padded_x_ == o.padded_x_ && halo_ == o.halo_;
}

GridBuffer alloc_grid(const StencilSpec& spec, Extents dims, Layout layout, int vl) {
  if (vl != 4 && vl != 8) throw std::invalid_argument("vector length must be 4 or 8, got " + std::to_string(vl));
  if (spec.order < 1 || spec.order > kMaxOrder) {
    throw std::invalid_argument("stencil order " + std::to_string(spec.order) + " unsupported");
  }
  for (int i = 0; i < 3; ++i) {
    if (dims[i] == 0) throw std::invalid_argument("grid extents must be positive");
    if (i >= spec.dim && dims[i] != 1) throw std::invalid_argument("extent given for unused dimension");
  }
  const std::size_t block = static_cast<std::size_t>(vl) * static_cast<std::size_t>(vl);
  if (dims[0] > std::numeric_limits<std::size_t>::max() / 4 - block) {
    throw std::invalid_argument("unit-stride extent overflows padding");
  }
  std::size_t padded = dims[0];
  switch (layout.kind) {
    case LayoutKind::natural:
      layout.vl = 0;
      break;
    case LayoutKind::block_transpose:
      layout.vl = vl;
      padded = round_up(dims[0], block);
      break;
    case LayoutKind::dlt:
      layout.vl = vl;
      if (dims[0] % static_cast<std::size_t>(vl) != 0) {
        throw std::invalid_argument("DLT needs the unit-stride extent " + std::to_string(dims[0]) +
                                    " divisible by vl " + std::to_string(vl));
      }
      break;
  }
  const std::array<int, 3> halo{2 * spec.order, spec.dim >= 2 ? spec.order : 0, spec.dim >= 3 ? spec.order : 0};
  const double cells = static_cast<double>(padded + 16 + 2 * halo[0]) * static_cast<double>(dims[1] + 2 * halo[1]) *
                       static_cast<double>(dims[2] + 2 * halo[2]);
  if (cells * sizeof(double) > static_cast<double>(std::numeric_limits<std::ptrdiff_t>::max()) / 2) {
    throw std::invalid_argument("grid too large");
  }
  return GridBuffer(spec.dim, dims, padded, halo, layout);
}

GridBuffer alloc_like(const GridBuffer& like, std::size_t padded_x, Layout layout) {
  if (padded_x < like.padded_x()) throw std::invalid_argument("alloc_like cannot shrink the padded extent");
  return GridBuffer(like.dim(), like.extents(), padded_x, like.halo(), layout);
}

void copy_boundary(const GridBuffer& src, GridBuffer& dst) {
  if (!src.same_shape(dst) || !(src.layout() == dst.layout())) {
    throw std::invalid_argument("copy_boundary: grids differ in shape or layout");
  }
  const auto& n = src.extents();
  const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(n[0]);
  const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(n[1]);
  const std::ptrdiff_t nz = static_cast<std::ptrdiff_t>(n[2]);
  for (std::ptrdiff_t z = src.z_begin(); z < src.z_end(); ++z) {
    for (std::ptrdiff_t y = src.y_begin(); y < src.y_end(); ++y) {
      const double* s = src.row(y, z);
      double* d = dst.row(y, z);
      if (y < 0 || y >= ny || z < 0 || z >= nz) {
        std::copy(s + src.x_begin(), s + src.x_end(), d + dst.x_begin());
        continue;
      }
      for (std::ptrdiff_t x = src.x_begin(); x < 0; ++x) d[x] = s[x];
      for (std::ptrdiff_t x = nx; x < src.x_end(); ++x) d[src.position(x)] = s[src.position(x)];
    }
  }
}

double max_relative_error(const GridBuffer& a, const GridBuffer& ref) {
  if (a.extents() != ref.extents()) throw std::invalid_argument("max_relative_error: extents differ");
  const auto& n = ref.extents();
  double worst = 0.0;
  for (std::size_t z = 0; z < n[2]; ++z)
    for (std::size_t y = 0; y < n[1]; ++y)
      for (std::size_t x = 0; x < n[0]; ++x) {
        const auto xi = static_cast<std::ptrdiff_t>(x), yi = static_cast<std::ptrdiff_t>(y),
                   zi = static_cast<std::ptrdiff_t>(z);
        const double r = ref.get(xi, yi, zi);
        const double v = a.get(xi, yi, zi);
        const double err = std::abs(v - r) / std::max(std::abs(r), 1e-300);
        if (!(err <= worst)) worst = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
      }
  return worst;
}

void seed_uniform(GridBuffer& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& n = grid.extents();
  const std::ptrdiff_t x_hi = static_cast<std::ptrdiff_t>(n[0]) + grid.halo()[0];
  for (std::ptrdiff_t z = grid.z_begin(); z < grid.z_end(); ++z)
    for (std::ptrdiff_t y = grid.y_begin(); y < grid.y_end(); ++y)
      for (std::ptrdiff_t x = grid.x_begin(); x < x_hi; ++x) {
        // 53 random mantissa bits; independent of the library's distributions.
        grid.set(x, y, z, static_cast<double>(rng() >> 11) * 0x1.0p-53);
      }
}

Extents make_extents(int dim, const std::vector<std::size_t>& sizes) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  Extents e{1, 1, 1};
  if (sizes.size() == 1) {
    for (int i = 0; i < dim; ++i) e[i] = sizes[0];
  } else if (static_cast<int>(sizes.size()) == dim) {
    for (int i = 0; i < dim; ++i) e[i] = sizes[i];
  } else {
    throw std::invalid_argument("expected 1 or " + std::to_string(dim) + " extents, got " +
                                std::to_string(sizes.size()));
  }
  for (auto v : e) {
    if (v == 0) throw std::invalid_argument("grid extents must be positive");
  }
  return e;
}

}  // namespace tstencil

namespace tstencil {

VectorSet load_vector_set(const GridBuffer& grid, std::size_t block, std::ptrdiff_t y, std::ptrdiff_t z) {
  if (grid.layout().kind != LayoutKind::block_transpose) {
    throw std::invalid_argument("load_vector_set needs a block_transpose grid");
  }
  const int vl = grid.layout().vl;
  const std::size_t bsize = static_cast<std::size_t>(vl * vl);
  if ((block + 1) * bsize > grid.padded_x()) throw std::out_of_range("vector set index out of range");
  VectorSet vs(vl, block * bsize);
  const double* p = grid.row(y, z) + block * bsize;
  std::copy(p, p + bsize, vs.rows.begin());
  return vs;
}

}  // namespace tstencil
