#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace esnoc {

/// Dense univariate polynomial, coefficients in ascending powers.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

  static Polynomial constant(double v) { return Polynomial({v}); }

  const std::vector<double>& coeffs() const { return c_; }
  std::size_t degree() const { return c_.empty() ? 0 : c_.size() - 1; }

  double operator()(double r) const {
    double v = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) v = v * r + c_[i];
    return v;
  }

  /// Antiderivative vanishing at zero.
  Polynomial integral() const {
    std::vector<double> out(c_.size() + 1, 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) out[i + 1] = c_[i] / static_cast<double>(i + 1);
    return Polynomial(std::move(out));
  }

  Polynomial derivative() const {
    if (c_.size() <= 1) return Polynomial({0.0});
    std::vector<double> out(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) out[i - 1] = static_cast<double>(i) * c_[i];
    return Polynomial(std::move(out));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> out(std::max(a.c_.size(), b.c_.size()), 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i) out[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) out[i] += b.c_[i];
    return Polynomial(std::move(out));
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.c_.empty() || b.c_.empty()) return Polynomial();
    std::vector<double> out(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(out));
  }

  friend Polynomial operator*(double s, Polynomial p) {
    for (double& x : p.c_) x *= s;
    return p;
  }

 private:
  std::vector<double> c_;
};

}  // namespace esnoc
