#pragma once

#include <vector>

namespace fedcluster {

// Dense real coordinate vector. Model parameters, gradients, momentums and
// data points are all plain coordinate vectors of doubles.
using Vector = std::vector<double>;

using ClientId = int;
using ClusterId = int;

/// Squared Euclidean distance. Throws std::invalid_argument on dimension
/// mismatch.
double squared_distance(const Vector& a, const Vector& b);

double norm_sq(const Vector& v);
double norm(const Vector& v);
double dot(const Vector& a, const Vector& b);

/// Coordinate-wise arithmetic mean of a nonempty point set.
/// Throws std::invalid_argument if empty or dimensions differ.
Vector mean(const std::vector<Vector>& points);

/// y += s * x
void add_scaled(Vector& y, double s, const Vector& x);

Vector scaled(const Vector& v, double s);
Vector sub(const Vector& a, const Vector& b);

bool all_finite(const Vector& v);

}  // namespace fedcluster
