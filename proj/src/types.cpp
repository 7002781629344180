#include "babplan/types.hpp"

#include <cmath>
#include <limits>

namespace babplan {

BoxDomain::BoxDomain(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size())
    throw std::invalid_argument("BoxDomain: bound dimensions differ");
  if (lower_.size() == 0) throw std::invalid_argument("BoxDomain: empty bounds");
  require_finite(lower_, "BoxDomain lower");
  require_finite(upper_, "BoxDomain upper");
  for (int j = 0; j < lower_.size(); ++j) {
    if (lower_[j] > upper_[j])
      throw std::invalid_argument("BoxDomain: lower exceeds upper at axis " + std::to_string(j));
  }
}

double BoxDomain::max_width() const {
  double w = 0.0;
  for (int j = 0; j < dim(); ++j) w = std::max(w, width(j));
  return w;
}

bool BoxDomain::contains(const Eigen::Ref<const Vector>& u, double tol) const {
  if (u.size() != lower_.size()) return false;
  for (int j = 0; j < u.size(); ++j) {
    if (u[j] < lower_[j] - tol || u[j] > upper_[j] + tol) return false;
  }
  return true;
}

double BoxDomain::log_volume_relative_to(const BoxDomain& root) const {
  if (dim() != root.dim()) throw std::invalid_argument("log_volume: dimension mismatch");
  double acc = 0.0;
  for (int j = 0; j < dim(); ++j) {
    const double rw = root.width(j);
    if (rw <= 0.0) continue;
    const double w = width(j);
    if (w <= 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(w / rw);
  }
  return acc;
}

}  // namespace babplan
