#pragma once

#include <cmath>
#include <optional>

#include "flare/error.hpp"

namespace flare {

// unit direction vector
struct Ray {
  double x = 0.0, y = 0.0, z = 1.0;

  Ray() = default;
  Ray(double x_, double y_, double z_, bool validate = true) : x(x_), y(y_), z(z_) {
    if (validate && std::abs(norm() - 1.0) > 1e-9)
      throw Error(ErrorKind::Parameter, "ray direction must be unit length");
  }
  static Ray normalized(double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (!(n > 0.0)) throw Error(ErrorKind::Parameter, "cannot normalize zero vector");
    return Ray(x / n, y / n, z / n, false);
  }
  double dot(const Ray& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

// Refraction at an interface n1 -> n2 with normal pointing toward the
// incident side (l.n < 0 required). Returns nullopt on total internal
// reflection. Output is unit length and satisfies Snell's law to 1e-9.
std::optional<Ray> refract(const Ray& incident, const Ray& normal, double n1, double n2);

// mirror direction l - 2(l.n)n
Ray reflect(const Ray& incident, const Ray& normal);

}  // namespace flare
