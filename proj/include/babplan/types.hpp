#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace babplan {

// Dense batches are row-major so each sample occupies a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

// Throws std::invalid_argument naming `what` if any entry is NaN or infinite.
template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const std::string& what) {
  if (!all_finite(m)) throw std::invalid_argument(what + ": non-finite values");
}

// Axis-aligned box. Degenerate coordinates (lower == upper) are allowed.
class BoxDomain {
 public:
  BoxDomain() = default;
  BoxDomain(Vector lower, Vector upper);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  double width(int j) const { return upper_[j] - lower_[j]; }
  Vector width() const { return upper_ - lower_; }
  double max_width() const;
  Vector center() const { return 0.5 * (lower_ + upper_); }
  Vector half_width() const { return 0.5 * (upper_ - lower_); }

  bool contains(const Eigen::Ref<const Vector>& u, double tol = 0.0) const;

  // Natural log of vol(this)/vol(root); dimensions that are degenerate in the
  // root are skipped so the root always has log-volume 0. Summing volumes in
  // log form keeps deep subdivisions (depth > 50) away from underflow.
  double log_volume_relative_to(const BoxDomain& root) const;

 private:
  Vector lower_, upper_;
};

}  // namespace babplan
