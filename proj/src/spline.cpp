#include "bnlte/spline.hpp"

#include <stdexcept>
#include <string>

namespace bnlte {

SplineBasis::SplineBasis(int num_interior_knots, int degree)
    : degree_(degree), num_interior_(num_interior_knots) {
  if (num_interior_knots < 0) {
    throw std::invalid_argument("SplineBasis: negative interior knot count");
  }
  if (degree < 0) {
    throw std::invalid_argument("SplineBasis: negative degree");
  }
  num_basis_ = num_interior_ + degree_ + 1;

  knots_.reserve(static_cast<std::size_t>(2 * (degree_ + 1) + num_interior_));
  for (int i = 0; i <= degree_; ++i) knots_.push_back(0.0);
  for (int k = 1; k <= num_interior_; ++k) {
    knots_.push_back(static_cast<double>(k) / (num_interior_ + 1));
  }
  for (int i = 0; i <= degree_; ++i) knots_.push_back(1.0);
}

int SplineBasis::find_span(double z) const {
  // Knot spans live between indices [degree, degree + num_interior]; the
  // right endpoint maps into the last span so B_{last}(1) = 1.
  const int last = degree_ + num_interior_;
  if (z >= 1.0) return last;
  int lo = degree_;
  int hi = last;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (knots_[static_cast<std::size_t>(mid)] <= z) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

void SplineBasis::evaluate_into(double z, Eigen::VectorXd& out) const {
  if (!(z >= 0.0 && z <= 1.0)) {
    throw std::domain_error("SplineBasis::evaluate: z outside [0,1], got " +
                            std::to_string(z));
  }
  out.setZero(num_basis_);

  const int span = find_span(z);
  double local[16];  // degree + 1 nonzero values, degree <= 15
  double left[16];
  double right[16];
  if (degree_ >= 16) {
    throw std::invalid_argument("SplineBasis: degree too large");
  }
  local[0] = 1.0;
  for (int j = 1; j <= degree_; ++j) {
    left[j] = z - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[j] = knots_[static_cast<std::size_t>(span + j)] - z;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = local[r] / (right[r + 1] + left[j - r]);
      local[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    local[j] = saved;
  }
  for (int k = 0; k <= degree_; ++k) {
    out[span - degree_ + k] = local[k];
  }
}

Eigen::VectorXd SplineBasis::evaluate(double z) const {
  Eigen::VectorXd out;
  evaluate_into(z, out);
  return out;
}

Eigen::MatrixXd SplineBasis::evaluate_rows(const Eigen::VectorXd& z) const {
  Eigen::MatrixXd rows(z.size(), num_basis_);
  Eigen::VectorXd tmp;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    evaluate_into(z[i], tmp);
    rows.row(i) = tmp.transpose();
  }
  return rows;
}

Eigen::MatrixXd SplineBasis::roughness_penalty() const {
  const int b = num_basis_;
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(b, b);
  if (b < 3) return penalty;
  Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(b - 2, b);
  for (int r = 0; r < b - 2; ++r) {
    diff(r, r) = 1.0;
    diff(r, r + 1) = -2.0;
    diff(r, r + 2) = 1.0;
  }
  penalty = diff.transpose() * diff;
  return penalty;
}

}  // namespace bnlte
