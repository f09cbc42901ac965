#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pmloop {

// Objective vectors are stored in the maximize convention unless a direction
// list says otherwise.
enum class Direction { maximize, minimize };

std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

using Point = std::vector<double>;

bool dominates(const Point& a, const Point& b);
bool dominates(const Point& a, const Point& b, const std::vector<Direction>& dirs);

// Flip minimized components so that larger is better everywhere.
Point to_internal(const Point& values, const std::vector<Direction>& dirs);

// Indices (ascending) of the nondominated members. Exact duplicates keep only
// their first occurrence.
std::vector<std::size_t> pareto_front(const std::vector<Point>& archive);

struct Hypervolume {
  double value = 0;
  std::size_t clipped = 0;  // points that do not strictly dominate r
  bool all_clipped = false;
};

Hypervolume hypervolume(const std::vector<Point>& points, const Point& r);
double hypervolume_2d(const std::vector<Point>& points, const Point& r);
double hypervolume_wfg(const std::vector<Point>& points, const Point& r);

Point default_reference_point(const std::vector<Point>& archive);

// Mean Euclidean distance from each point to its nearest reference point.
double generational_distance(const std::vector<Point>& points, const std::vector<Point>& reference);

}  // namespace pmloop
