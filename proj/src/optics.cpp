#include "flare/optics.hpp"

namespace flare {

std::optional<Ray> refract(const Ray& incident, const Ray& normal, double n1, double n2) {
  if (!(n1 > 0.0) || !(n2 > 0.0))
    throw Error(ErrorKind::Parameter, "refractive indices must be positive");
  const double cos_i = incident.dot(normal);
  if (cos_i >= 0.0)
    throw Error(ErrorKind::Parameter, "normal must oppose the incident direction (l.n < 0)");

  const double eta = n1 / n2;
  const double radicand = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
  if (radicand < 0.0) return std::nullopt;  // total internal reflection

  const double coeff = std::sqrt(radicand) + eta * cos_i;
  Ray out;
  out.x = eta * incident.x - coeff * normal.x;
  out.y = eta * incident.y - coeff * normal.y;
  out.z = eta * incident.z - coeff * normal.z;
  return out;
}

Ray reflect(const Ray& incident, const Ray& normal) {
  const double d = 2.0 * incident.dot(normal);
  Ray out;
  out.x = incident.x - d * normal.x;
  out.y = incident.y - d * normal.y;
  out.z = incident.z - d * normal.z;
  return out;
}

}  // namespace flare
