#include "fedcluster/vec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedcluster {

namespace {
void require_same_dim(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("vector dimension mismatch");
  }
}
}  // namespace

double squared_distance(const Vector& a, const Vector& b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

double norm_sq(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double norm(const Vector& v) { return std::sqrt(norm_sq(v)); }

double dot(const Vector& a, const Vector& b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

Vector mean(const std::vector<Vector>& points) {
  if (points.empty()) throw std::invalid_argument("mean of empty point set");
  // Canonical summation order (lexicographic in the values) keeps the result
  // bit-identical under any reordering of the input.
  std::vector<const Vector*> terms;
  terms.reserve(points.size());
  for (const Vector& p : points) {
    require_same_dim(points.front(), p);
    terms.push_back(&p);
  }
  std::sort(terms.begin(), terms.end(),
            [](const Vector* a, const Vector* b) { return *a < *b; });
  if (*terms.front() == *terms.back()) return points.front();  // k copies of one value
  Vector m(points.front().size(), 0.0);
  for (const Vector* t : terms) {
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += (*t)[j];
  }
  const double inv = 1.0 / static_cast<double>(points.size());
  for (double& x : m) x *= inv;
  return m;
}

void add_scaled(Vector& y, double s, const Vector& x) {
  require_same_dim(y, x);
  for (std::size_t j = 0; j < y.size(); ++j) y[j] += s * x[j];
}

Vector scaled(const Vector& v, double s) {
  Vector out(v);
  for (double& x : out) x *= s;
  return out;
}

Vector sub(const Vector& a, const Vector& b) {
  require_same_dim(a, b);
  Vector out(a);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] -= b[j];
  return out;
}

bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace fedcluster
