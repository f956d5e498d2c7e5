#include "perilps/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "perilps/error.hpp"

namespace perilps {

namespace {

double classification_tolerance(double delta) { return 1e-9 * delta; }

// Fraction of [x - h/2, x + h/2] inside [lo, hi].
double overlap(double x, double h, double lo, double hi) {
  const double a = std::max(x - 0.5 * h, lo);
  const double b = std::min(x + 0.5 * h, hi);
  return std::max(b - a, 0.0);
}

// Area of the lattice cell around x clipped to Ω.
double clipped_cell_area(const Domain& domain, const Vec2& x, double h) {
  if (domain.is_square()) {
    const auto& sq = domain.square_shape();
    return overlap(x.x(), h, sq.center.x() - sq.half_width, sq.center.x() + sq.half_width) *
           overlap(x.y(), h, sq.center.y() - sq.half_width, sq.center.y() + sq.half_width);
  }
  // The cell half-diagonal bounds how far any cell point is from x.
  if (domain.signed_distance(x) <= -h * std::numbers::sqrt2 / 2) return h * h;
  constexpr int kSub = 16;
  int inside = 0;
  for (int a = 0; a < kSub; ++a) {
    for (int b = 0; b < kSub; ++b) {
      const Vec2 p = x + h * Vec2((a + 0.5) / kSub - 0.5, (b + 0.5) / kSub - 0.5);
      if (domain.signed_distance(p) <= 0.0) ++inside;
    }
  }
  return h * h * inside / (kSub * kSub);
}

void check_spacing(const Domain& domain, double h, double delta) {
  if (!(h > 0.0)) throw InputError("grid spacing h must be positive");
  if (!(delta > 0.0)) throw InputError("horizon delta must be positive");
  if (h >= domain.extent()) {
    std::ostringstream msg;
    msg << "grid spacing h=" << h << " is not smaller than the domain extent " << domain.extent();
    throw InputError(msg.str());
  }
  if (delta < 2.0 * h * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "delta=" << delta << " must be at least 2h=" << 2.0 * h;
    throw InputError(msg.str());
  }
}

void push_node(PointCloud& cloud, const Vec2& x, double area, std::int64_t partner) {
  cloud.positions.push_back(x);
  cloud.cell_areas.push_back(area);
  cloud.mirror_partner.push_back(partner);
}

// Appends reflections of inside nodes across ∂Ω out to depth 2δ.
void add_mirror_nodes(PointCloud& cloud) {
  const Domain& domain = cloud.domain;
  const double tol = classification_tolerance(cloud.delta);
  const double depth = 2.0 * cloud.delta + tol;
  const std::size_t n_inside = cloud.positions.size();

  for (std::size_t i = 0; i < n_inside; ++i) {
    if (domain.is_annulus() && cloud.positions[i].norm() < tol) {
      std::ostringstream msg;
      msg << "node " << i << " sits at the annulus center and has no unique boundary projection";
      throw InputError(msg.str());
    }
  }

  if (domain.is_square()) {
    const auto& sq = domain.square_shape();
    for (int axis = 0; axis < 2; ++axis) {
      for (int side : {-1, 1}) {
        const double face = sq.center[axis] + side * sq.half_width;
        for (std::size_t i = 0; i < n_inside; ++i) {
          const Vec2 x = cloud.positions[i];
          const double gap = side * (face - x[axis]);
          if (gap > tol && gap <= depth) {
            Vec2 y = x;
            y[axis] = 2.0 * face - x[axis];
            push_node(cloud, y, cloud.cell_areas[i], static_cast<std::int64_t>(i));
          }
        }
      }
    }
    for (int sx : {-1, 1}) {
      for (int sy : {-1, 1}) {
        const Vec2 corner = sq.center + sq.half_width * Vec2(sx, sy);
        for (std::size_t i = 0; i < n_inside; ++i) {
          const Vec2 x = cloud.positions[i];
          const bool strictly_inside = sx * (corner.x() - x.x()) > tol && sy * (corner.y() - x.y()) > tol;
          if (strictly_inside && (x - corner).norm() <= depth) {
            push_node(cloud, 2.0 * corner - x, cloud.cell_areas[i], static_cast<std::int64_t>(i));
          }
        }
      }
    }
    return;
  }

  const auto& an = domain.annulus_shape();
  for (double radius : {an.r_inner, an.r_outer}) {
    for (std::size_t i = 0; i < n_inside; ++i) {
      const Vec2 x = cloud.positions[i];
      const double r = x.norm();
      const double gap = std::abs(r - radius);
      if (gap > tol && gap <= depth) {
        const Vec2 y = x * ((2.0 * radius - r) / r);
        push_node(cloud, y, cloud.cell_areas[i], static_cast<std::int64_t>(i));
      }
    }
  }
}

void finish_cloud(PointCloud& cloud) {
  classify_regions(cloud, cloud.domain, cloud.delta);
  cloud.neighbors = neighbors(cloud.positions, cloud.delta);
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain

Domain Domain::square(Vec2 center, double half_width) {
  if (!(half_width > 0.0)) throw InputError("square half-width must be positive");
  return Domain(SquareShape{center, half_width});
}

Domain Domain::annulus(double r_inner, double r_outer) {
  if (!(r_inner > 0.0 && r_outer > r_inner)) throw InputError("annulus requires 0 < R0 < R1");
  return Domain(AnnulusShape{r_inner, r_outer});
}

double Domain::signed_distance(const Vec2& x) const {
  if (is_square()) {
    const auto& sq = square_shape();
    const Vec2 q = (x - sq.center).cwiseAbs() - Vec2::Constant(sq.half_width);
    const double outside = q.cwiseMax(0.0).norm();
    const double inside = std::min(std::max(q.x(), q.y()), 0.0);
    return outside + inside;
  }
  const auto& an = annulus_shape();
  const double r = x.norm();
  return std::max(an.r_inner - r, r - an.r_outer);
}

double Domain::boundary_distance(const Vec2& x) const { return std::abs(signed_distance(x)); }

Vec2 Domain::project(const Vec2& x) const {
  if (is_square()) {
    const auto& sq = square_shape();
    const Vec2 d = x - sq.center;
    const double hw = sq.half_width;
    Vec2 p = d.cwiseMax(-hw).cwiseMin(hw);
    if (d.cwiseAbs().maxCoeff() < hw) {
      // Inside: move to the nearest face.
      const Vec2 gap = Vec2::Constant(hw) - d.cwiseAbs();
      const int axis = gap.x() <= gap.y() ? 0 : 1;
      p[axis] = d[axis] >= 0.0 ? hw : -hw;
    }
    return sq.center + p;
  }
  const auto& an = annulus_shape();
  const double r = x.norm();
  if (r == 0.0) throw InputError("annulus center has no unique boundary projection");
  const double target = std::abs(r - an.r_inner) <= std::abs(r - an.r_outer) ? an.r_inner : an.r_outer;
  return x * (target / r);
}

double Domain::area() const {
  if (is_square()) {
    const double w = 2.0 * square_shape().half_width;
    return w * w;
  }
  const auto& an = annulus_shape();
  return std::numbers::pi * (an.r_outer * an.r_outer - an.r_inner * an.r_inner);
}

double Domain::extent() const {
  if (is_square()) return 2.0 * square_shape().half_width;
  return annulus_shape().r_outer - annulus_shape().r_inner;
}

std::string Domain::describe() const {
  std::ostringstream s;
  if (is_square()) {
    const auto& sq = square_shape();
    s << "square(c=(" << sq.center.x() << "," << sq.center.y() << "),hw=" << sq.half_width << ")";
  } else {
    s << "annulus(R0=" << annulus_shape().r_inner << ",R1=" << annulus_shape().r_outer << ")";
  }
  return s.str();
}

const char* region_name(Region r) {
  switch (r) {
    case Region::Interior: return "interior";
    case Region::InnerCollar: return "inner_collar";
    case Region::OuterCollar: return "outer_collar";
  }
  return "?";
}

const char* grid_name(GridKind g) { return g == GridKind::Cartesian ? "cartesian" : "polar"; }

// ---------------------------------------------------------------------------
// Cloud construction

PointCloud build_cartesian_cloud(const Domain& domain, double h, double delta, bool mirror) {
  check_spacing(domain, h, delta);
  PointCloud cloud;
  cloud.domain = domain;
  cloud.grid = GridKind::Cartesian;
  cloud.mirror = mirror;
  cloud.h = h;
  cloud.delta = delta;

  const double tol = classification_tolerance(delta);
  Vec2 lo, hi;
  if (domain.is_square()) {
    const auto& sq = domain.square_shape();
    const double reach = sq.half_width + 2.0 * delta;
    lo = sq.center - Vec2::Constant(reach);
    hi = sq.center + Vec2::Constant(reach);
  } else {
    const double reach = domain.annulus_shape().r_outer + 2.0 * delta;
    lo = Vec2::Constant(-reach);
    hi = Vec2::Constant(reach);
  }
  const long p0 = static_cast<long>(std::floor(lo.x() / h)) - 1;
  const long p1 = static_cast<long>(std::ceil(hi.x() / h)) + 1;
  const long q0 = static_cast<long>(std::floor(lo.y() / h)) - 1;
  const long q1 = static_cast<long>(std::ceil(hi.y() / h)) + 1;

  // Inside nodes first so exterior mirror nodes can refer back to them.
  for (int pass = 0; pass < 2; ++pass) {
    if (pass == 1 && mirror) break;
    for (long q = q0; q <= q1; ++q) {
      for (long p = p0; p <= p1; ++p) {
        const Vec2 x(static_cast<double>(p) * h, static_cast<double>(q) * h);
        const double sd = domain.signed_distance(x);
        const bool inside = sd <= tol;
        if (pass == 0 && inside) {
          push_node(cloud, x, clipped_cell_area(domain, x, h), -1);
        } else if (pass == 1 && !inside && sd <= 2.0 * delta + tol) {
          push_node(cloud, x, h * h, -1);
        }
      }
    }
  }
  if (mirror) add_mirror_nodes(cloud);
  finish_cloud(cloud);
  return cloud;
}

PointCloud build_polar_cloud(const Domain& domain, double h, double delta, bool mirror) {
  if (!domain.is_annulus()) throw InputError("polar grids are only defined on the annulus");
  check_spacing(domain, h, delta);
  const auto& an = domain.annulus_shape();
  if (delta >= 0.5 * (an.r_outer - an.r_inner)) {
    std::ostringstream msg;
    msg << "delta=" << delta << " must be below (R1-R0)/2=" << 0.5 * (an.r_outer - an.r_inner)
        << " or the inner and outer collars overlap";
    throw InputError(msg.str());
  }
  const double turns = 10.0 / h;
  const long n_angles = std::lround(turns);
  if (std::abs(turns - static_cast<double>(n_angles)) > 1e-9 * turns) {
    std::ostringstream msg;
    msg << "polar grid requires 10/h to be an integer (h=" << h << ")";
    throw InputError(msg.str());
  }

  PointCloud cloud;
  cloud.domain = domain;
  cloud.grid = GridKind::Polar;
  cloud.mirror = mirror;
  cloud.h = h;
  cloud.delta = delta;

  const double tol = classification_tolerance(delta);
  const double dtheta = std::numbers::pi * h / 5.0;
  const long r_lo = static_cast<long>(std::floor((an.r_inner - 2.0 * delta) / h)) - 1;
  const long r_hi = static_cast<long>(std::ceil((an.r_outer + 2.0 * delta) / h)) + 1;

  for (int pass = 0; pass < 2; ++pass) {
    if (pass == 1 && mirror) break;
    for (long p = std::max(r_lo, 1L); p <= r_hi; ++p) {
      const double r = static_cast<double>(p) * h;
      const double sd = std::max(an.r_inner - r, r - an.r_outer);
      const bool inside = sd <= tol;
      const bool take = pass == 0 ? inside : (!inside && sd <= 2.0 * delta + tol);
      if (!take) continue;
      // Rings on ∂Ω carry half a radial cell.
      double area = r * h * dtheta;
      if (inside && sd > -0.5 * h) area *= 0.5 + std::min(-sd, 0.5 * h) / h;
      for (long q = 0; q < n_angles; ++q) {
        const double angle = dtheta * static_cast<double>(q);
        push_node(cloud, Vec2(r * std::cos(angle), r * std::sin(angle)), area, -1);
      }
    }
  }
  if (mirror) add_mirror_nodes(cloud);
  finish_cloud(cloud);
  return cloud;
}

void classify_regions(PointCloud& cloud, const Domain& domain, double delta) {
  const double tol = classification_tolerance(delta);
  const std::size_t n = cloud.positions.size();
  cloud.tags.assign(n, RegionTag{});
  cloud.distances.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double sd = domain.signed_distance(cloud.positions[i]);
    if (sd > 2.0 * delta + tol) {
      std::ostringstream msg;
      msg << "node " << i << " at (" << cloud.positions[i].x() << ", " << cloud.positions[i].y()
          << ") lies " << sd << " outside the domain, beyond the 2*delta collar";
      throw InputError(msg.str());
    }
    RegionTag tag;
    if (sd > tol) {
      tag.region = Region::OuterCollar;
      tag.within_delta = sd <= delta + tol;
      cloud.distances[i] = sd;
    } else {
      const double dist = std::max(-sd, 0.0);
      tag.region = dist < 2.0 * delta - tol ? Region::InnerCollar : Region::Interior;
      tag.within_delta = dist < delta - tol;
      cloud.distances[i] = dist;
    }
    cloud.tags[i] = tag;
  }
}

// ---------------------------------------------------------------------------
// Neighbor search

namespace {

struct CellGrid {
  double size;
  Vec2 origin;
  long nx, ny;
  std::vector<std::size_t> start;
  std::vector<std::uint32_t> items;

  CellGrid(const std::vector<Vec2>& pts, double cell) : size(cell) {
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::max());
    Vec2 hi = Vec2::Constant(std::numeric_limits<double>::lowest());
    for (const auto& p : pts) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    if (pts.empty()) lo = hi = Vec2::Zero();
    origin = lo;
    nx = static_cast<long>((hi.x() - lo.x()) / size) + 1;
    ny = static_cast<long>((hi.y() - lo.y()) / size) + 1;
    std::vector<std::size_t> counts(static_cast<std::size_t>(nx * ny) + 1, 0);
    std::vector<long> cell_of(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cell_of[i] = index(pts[i]);
      ++counts[static_cast<std::size_t>(cell_of[i]) + 1];
    }
    for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
    start = counts;
    items.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      items[counts[static_cast<std::size_t>(cell_of[i])]++] = static_cast<std::uint32_t>(i);
    }
  }

  long cx(const Vec2& p) const { return std::clamp(static_cast<long>((p.x() - origin.x()) / size), 0L, nx - 1); }
  long cy(const Vec2& p) const { return std::clamp(static_cast<long>((p.y() - origin.y()) / size), 0L, ny - 1); }
  long index(const Vec2& p) const { return cy(p) * nx + cx(p); }

  template <class Fn>
  void visit(const Vec2& p, long reach, Fn&& fn) const {
    const long x0 = cx(p), y0 = cy(p);
    for (long y = std::max(y0 - reach, 0L); y <= std::min(y0 + reach, ny - 1); ++y) {
      for (long x = std::max(x0 - reach, 0L); x <= std::min(x0 + reach, nx - 1); ++x) {
        const auto c = static_cast<std::size_t>(y * nx + x);
        for (std::size_t k = start[c]; k < start[c + 1]; ++k) fn(items[k]);
      }
    }
  }
};

}  // namespace

NeighborLists neighbors(const std::vector<Vec2>& positions, double delta) {
  NeighborLists out;
  const std::size_t n = positions.size();
  out.offsets.assign(n + 1, 0);
  if (n == 0) return out;
  const double radius = delta * (1.0 + kBallTolerance);
  const double r2 = radius * radius;
  CellGrid grid(positions, radius);
  std::vector<std::uint32_t> scratch;
  for (std::size_t i = 0; i < n; ++i) {
    scratch.clear();
    const Vec2& xi = positions[i];
    grid.visit(xi, 1, [&](std::uint32_t j) {
      if (j != i && (positions[j] - xi).squaredNorm() <= r2) scratch.push_back(j);
    });
    std::sort(scratch.begin(), scratch.end());
    out.indices.insert(out.indices.end(), scratch.begin(), scratch.end());
    out.offsets[i + 1] = out.indices.size();
  }
  return out;
}

namespace {

double nearest_distance(const std::vector<Vec2>& pts, const CellGrid& grid, std::size_t i) {
  double best = std::numeric_limits<double>::infinity();
  for (long reach = 1;; ++reach) {
    grid.visit(pts[i], reach, [&](std::uint32_t j) {
      if (j != i) best = std::min(best, (pts[j] - pts[i]).norm());
    });
    // Anything within `reach` cells is final once best fits inside that ring.
    if (best <= static_cast<double>(reach) * grid.size || reach > std::max(grid.nx, grid.ny)) return best;
  }
}

}  // namespace

double separation_distance(const PointCloud& cloud) {
  if (cloud.size() < 2) return 0.0;
  CellGrid grid(cloud.positions, std::max(cloud.h, 1e-300));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) best = std::min(best, nearest_distance(cloud.positions, grid, i));
  return 0.5 * best;
}

double fill_distance_estimate(const PointCloud& cloud) {
  if (cloud.size() < 2) return 0.0;
  CellGrid grid(cloud.positions, std::max(cloud.h, 1e-300));
  double worst = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) worst = std::max(worst, nearest_distance(cloud.positions, grid, i));
  return worst;
}

void write_cloud_csv(std::ostream& out, const PointCloud& cloud) {
  out << "x,y,tag,area\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out << cloud.positions[i].x() << ',' << cloud.positions[i].y() << ','
        << region_name(cloud.tags[i].region) << ',' << cloud.cell_areas[i] << '\n';
  }
  out.precision(old);
}

}  // namespace perilps
