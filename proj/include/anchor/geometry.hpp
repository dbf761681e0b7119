#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace anchor {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return a += b; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return a -= b; }
  friend Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 lerp(Vec2 a, Vec2 b, double s) { return a + (b - a) * s; }

inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::remainder(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

inline Vec2 centroid(std::span<const Vec2> pts) {
  Vec2 c;
  if (pts.empty()) return c;
  for (const Vec2& p : pts) c += p;
  return c * (1.0 / static_cast<double>(pts.size()));
}

/// Closed-form 2D orthogonal Procrustes: the rotation that best maps the
/// centered `from` constellation onto the centered `to` constellation.
/// Point correspondence is by index. Returns 0 for degenerate input.
inline double procrustes_angle(std::span<const Vec2> from, std::span<const Vec2> to) {
  if (from.size() != to.size() || from.size() < 2) return 0.0;
  const Vec2 cf = centroid(from);
  const Vec2 ct = centroid(to);
  double sum_dot = 0.0;
  double sum_cross = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    const Vec2 a = from[i] - cf;
    const Vec2 b = to[i] - ct;
    sum_dot += dot(a, b);
    sum_cross += cross(a, b);
  }
  if (sum_dot == 0.0 && sum_cross == 0.0) return 0.0;
  return std::atan2(sum_cross, sum_dot);
}

}  // namespace anchor
