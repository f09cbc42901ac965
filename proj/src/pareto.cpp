#include "pmloop/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pmloop/error.hpp"

namespace pmloop {

namespace {

void check_same_size(const Point& a, const Point& b) {
  if (a.size() != b.size()) throw Error(Errc::dimension_mismatch, "objective vectors differ in length");
}

void check_archive(const std::vector<Point>& pts, std::size_t m) {
  for (const auto& p : pts) {
    if (p.size() != m) throw Error(Errc::dimension_mismatch, "objective vectors differ in length");
    for (double v : p)
      if (!std::isfinite(v)) throw Error(Errc::non_finite_input, "objective values must be finite");
  }
}

// Points strictly better than r in every component.
std::vector<Point> clip(const std::vector<Point>& points, const Point& r) {
  std::vector<Point> out;
  for (const auto& p : points) {
    bool ok = true;
    for (std::size_t i = 0; i < r.size() && ok; ++i) ok = p[i] > r[i];
    if (ok) out.push_back(p);
  }
  return out;
}

std::vector<Point> nondominated(std::vector<Point> pts) {
  std::vector<Point> out;
  if (pts.empty()) return out;
  for (auto i : pareto_front(pts)) out.push_back(std::move(pts[i]));
  return out;
}

double wfg(std::vector<Point> pts, const Point& r) {
  if (pts.empty()) return 0;
  const std::size_t m = r.size();
  if (m == 1) {
    double best = r[0];
    for (const auto& p : pts) best = std::max(best, p[0]);
    return best - r[0];
  }
  // Sorting on the last objective keeps the limited sets small.
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.back() > b.back(); });
  double total = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double incl = 1;
    for (std::size_t k = 0; k < m; ++k) incl *= pts[i][k] - r[k];
    std::vector<Point> limited;
    limited.reserve(pts.size() - i - 1);
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      Point q(m);
      for (std::size_t k = 0; k < m; ++k) q[k] = std::min(pts[i][k], pts[j][k]);
      limited.push_back(std::move(q));
    }
    total += incl - wfg(nondominated(std::move(limited)), r);
  }
  return total;
}

}  // namespace

std::string to_string(Direction d) { return d == Direction::maximize ? "maximize" : "minimize"; }

Direction parse_direction(const std::string& s) {
  if (s == "maximize" || s == "max") return Direction::maximize;
  if (s == "minimize" || s == "min") return Direction::minimize;
  throw Error(Errc::invalid_argument, "unknown direction '" + s + "'");
}

bool dominates(const Point& a, const Point& b) {
  check_same_size(a, b);
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

bool dominates(const Point& a, const Point& b, const std::vector<Direction>& dirs) {
  check_same_size(a, b);
  if (dirs.size() != a.size()) throw Error(Errc::dimension_mismatch, "direction count differs from objectives");
  return dominates(to_internal(a, dirs), to_internal(b, dirs));
}

Point to_internal(const Point& values, const std::vector<Direction>& dirs) {
  if (dirs.size() != values.size()) throw Error(Errc::dimension_mismatch, "direction count differs from objectives");
  Point out(values);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (dirs[i] == Direction::minimize) out[i] = -out[i];
  return out;
}

std::vector<std::size_t> pareto_front(const std::vector<Point>& archive) {
  if (archive.empty()) throw Error(Errc::empty_archive, "pareto front of an empty archive");
  check_archive(archive, archive.front().size());
  // In descending lexicographic order a point can only be dominated by (or
  // equal to) points that come before it, and checking against the kept
  // members suffices by transitivity.
  std::vector<std::size_t> order(archive.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return archive[a] > archive[b]; });
  std::vector<std::size_t> kept;
  for (auto i : order) {
    bool keep = true;
    for (auto k : kept)
      if (archive[k] == archive[i] || dominates(archive[k], archive[i])) {
        keep = false;
        break;
      }
    if (keep) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

double hypervolume_2d(const std::vector<Point>& points, const Point& r) {
  if (r.size() != 2) throw Error(Errc::dimension_mismatch, "2-D sweep needs two objectives");
  check_archive(points, 2);
  auto pts = clip(points, r);
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a[0] != b[0] ? a[0] > b[0] : a[1] > b[1];
  });
  // Accumulated in extended precision and rounded once, so a point that adds
  // less than one rounding error cannot make the result go down.
  long double hv = 0;
  double top = r[1];
  for (const auto& p : pts) {
    if (p[1] > top) {
      hv += (static_cast<long double>(p[0]) - r[0]) * (static_cast<long double>(p[1]) - top);
      top = p[1];
    }
  }
  return static_cast<double>(hv);
}

double hypervolume_wfg(const std::vector<Point>& points, const Point& r) {
  if (r.empty()) throw Error(Errc::dimension_mismatch, "reference point is empty");
  check_archive(points, r.size());
  auto pts = clip(points, r);
  if (pts.empty()) return 0;
  return wfg(nondominated(std::move(pts)), r);
}

Hypervolume hypervolume(const std::vector<Point>& points, const Point& r) {
  if (r.empty()) throw Error(Errc::dimension_mismatch, "reference point is empty");
  check_archive(points, r.size());
  for (double v : r)
    if (!std::isfinite(v)) throw Error(Errc::invalid_reference, "reference point must be finite");
  Hypervolume out;
  const auto kept = clip(points, r).size();
  out.clipped = points.size() - kept;
  out.all_clipped = kept == 0 && !points.empty();
  out.value = r.size() == 2 ? hypervolume_2d(points, r) : hypervolume_wfg(points, r);
  return out;
}

Point default_reference_point(const std::vector<Point>& archive) {
  if (archive.empty()) throw Error(Errc::empty_archive, "reference point of an empty archive");
  const std::size_t m = archive.front().size();
  check_archive(archive, m);
  Point r(m);
  for (std::size_t k = 0; k < m; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : archive) {
      lo = std::min(lo, p[k]);
      hi = std::max(hi, p[k]);
    }
    const double range = hi - lo;
    r[k] = range > 0 ? lo - 0.1 * range : lo - std::max(0.1 * std::abs(lo), 1e-6);
  }
  return r;
}

double generational_distance(const std::vector<Point>& points, const std::vector<Point>& reference) {
  if (points.empty() || reference.empty()) throw Error(Errc::empty_archive, "generational distance needs points");
  const std::size_t m = reference.front().size();
  check_archive(points, m);
  check_archive(reference, m);
  double total = 0;
  for (const auto& p : points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : reference) {
      double s = 0;
      for (std::size_t k = 0; k < m; ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
      best = std::min(best, s);
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(points.size());
}

}  // namespace pmloop
