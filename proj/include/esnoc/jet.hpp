#pragma once

// Multivariate truncated Taylor arithmetic (forward-mode AD of arbitrary order).
//
// A Jet stores the Taylor coefficients of a scalar function of `nvars`
// variables around an expansion point, truncated at total degree `order`:
//
//   f(p + d) = sum_m  coeff[m] * d^m,   |m| <= order
//
// so coeff of the monomial e_v is the exact partial derivative df/dx_v.
// Differentiating a jet with respect to one variable yields another jet that
// is exact up to order - 1; the number of trustworthy orders is tracked in
// `valid_order()`.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace esnoc {

/// Monomial bookkeeping shared by every jet of a given (nvars, order).
class JetSpace {
 public:
  JetSpace(int nvars, int order) : nvars_(nvars), order_(order) {
    if (nvars < 0 || order < 0) throw std::invalid_argument("JetSpace: negative size");
    std::vector<int> e(nvars, 0);
    exponents_.push_back(e);
    degree_.push_back(0);
    // graded enumeration: every monomial of degree d is obtained by bumping one
    // variable of a degree d-1 monomial, deduplicated through the index map.
    std::map<std::vector<int>, int> index;
    index[e] = 0;
    std::size_t begin = 0;
    for (int d = 1; d <= order; ++d) {
      const std::size_t end = exponents_.size();
      for (std::size_t k = begin; k < end; ++k) {
        for (int v = 0; v < nvars; ++v) {
          auto next = exponents_[k];
          ++next[v];
          if (index.emplace(next, static_cast<int>(exponents_.size())).second) {
            exponents_.push_back(next);
            degree_.push_back(d);
          }
        }
      }
      begin = end;
    }
    const int size = static_cast<int>(exponents_.size());
    for (int a = 0; a < size; ++a) {
      for (int b = 0; b < size; ++b) {
        if (degree_[a] + degree_[b] > order) continue;
        std::vector<int> sum(nvars);
        for (int v = 0; v < nvars; ++v) sum[v] = exponents_[a][v] + exponents_[b][v];
        products_.push_back({a, b, index.at(sum)});
      }
    }
    derivatives_.resize(nvars);
    for (int v = 0; v < nvars; ++v) {
      for (int k = 0; k < size; ++k) {
        if (exponents_[k][v] == 0) continue;
        auto lower = exponents_[k];
        --lower[v];
        derivatives_[v].push_back({k, index.at(lower), static_cast<double>(exponents_[k][v])});
      }
    }
    unit_.resize(nvars);
    for (int v = 0; v < nvars; ++v) {
      std::vector<int> ev(nvars, 0);
      if (order >= 1) {
        ev[v] = 1;
        unit_[v] = index.at(ev);
      } else {
        unit_[v] = -1;
      }
    }
  }

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(exponents_.size()); }
  int degree(int k) const { return degree_[k]; }
  /// Coefficient index of the linear monomial x_v, or -1 at order 0.
  int unit(int v) const { return unit_[v]; }

  struct ProductTerm { int a, b, out; };
  struct DerivativeTerm { int from, to; double factor; };

  std::span<const ProductTerm> products() const { return products_; }
  std::span<const DerivativeTerm> derivative_terms(int v) const { return derivatives_[v]; }

 private:
  int nvars_;
  int order_;
  std::vector<std::vector<int>> exponents_;
  std::vector<int> degree_;
  std::vector<ProductTerm> products_;
  std::vector<std::vector<DerivativeTerm>> derivatives_;
  std::vector<int> unit_;
};

class Jet {
 public:
  Jet() = default;

  static Jet constant(std::shared_ptr<const JetSpace> space, double value) {
    Jet j(std::move(space));
    j.c_[0] = value;
    j.valid_ = std::numeric_limits<int>::max();
    return j;
  }

  /// The jet of the coordinate function x_v expanded at `value`.
  static Jet variable(std::shared_ptr<const JetSpace> space, int v, double value) {
    Jet j = constant(space, value);
    if (space->order() >= 1) j.c_[space->unit(v)] = 1.0;
    return j;
  }

  double value() const { return c_.empty() ? 0.0 : c_[0]; }
  double coeff(int k) const { return c_[k]; }
  const std::shared_ptr<const JetSpace>& space() const { return space_; }
  int valid_order() const { return std::min(valid_, space_ ? space_->order() : 0); }

  /// First partial derivative df/dx_v at the expansion point.
  double partial(int v) const {
    assert(valid_order() >= 1);
    const int k = space_->unit(v);
    return k < 0 ? 0.0 : c_[k];
  }

  /// The jet of df/dx_v; exact to one order less than this jet.
  Jet derivative(int v) const {
    if (valid_order() < 1) throw std::logic_error("Jet::derivative: no valid first-order terms");
    Jet d(space_);
    for (const auto& term : space_->derivative_terms(v)) d.c_[term.to] += term.factor * c_[term.from];
    d.valid_ = valid_order() - 1;
    return d;
  }

  Jet operator-() const {
    Jet r = *this;
    for (double& x : r.c_) x = -x;
    return r;
  }

  Jet& operator+=(const Jet& o) {
    adopt(o);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    valid_ = std::min(valid_, o.valid_);
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    adopt(o);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    valid_ = std::min(valid_, o.valid_);
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
  }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
  }
  Jet& operator/=(double s) {
    for (double& x : c_) x /= s;
    return *this;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.space_ ? a.space_ : b.space_);
    for (const auto& p : r.space_->products()) r.c_[p.out] += a.c_[p.a] * b.c_[p.b];
    r.valid_ = std::min(a.valid_, b.valid_);
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

  /// f(a) from the derivative sequence derivs[k] = f^(k)(a.value()).
  friend Jet compose(const Jet& a, std::span<const double> derivs) {
    const int order = a.space_->order();
    Jet nil = a;  // nilpotent part
    nil.c_[0] = 0.0;
    Jet r = constant(a.space_, derivs[0]);
    r.valid_ = a.valid_;
    Jet power = constant(a.space_, 1.0);
    double factorial = 1.0;
    for (int k = 1; k <= order && k < static_cast<int>(derivs.size()); ++k) {
      power = power * nil;
      factorial *= k;
      Jet term = power;
      term *= derivs[k] / factorial;
      r.add_raw(term);
    }
    return r;
  }

  friend Jet reciprocal(const Jet& a) {
    const double x = a.value();
    std::vector<double> d(a.space_->order() + 1);
    double f = 1.0 / x;
    for (std::size_t k = 0; k < d.size(); ++k) {
      d[k] = f;
      f *= -static_cast<double>(k + 1) / x;
    }
    return compose(a, d);
  }

 private:
  explicit Jet(std::shared_ptr<const JetSpace> space)
      : space_(std::move(space)), c_(space_->size(), 0.0), valid_(std::numeric_limits<int>::max()) {}

  void adopt(const Jet& o) {
    if (!space_) {
      *this = constant(o.space_, value());
    }
  }
  void add_raw(const Jet& o) {
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  }

  std::shared_ptr<const JetSpace> space_;
  std::vector<double> c_;
  int valid_ = std::numeric_limits<int>::max();
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator+(Jet a, double s) { return a += s; }
inline Jet operator+(double s, Jet a) { return a += s; }
inline Jet operator-(Jet a, double s) { return a -= s; }
inline Jet operator-(double s, const Jet& a) { return (-a) += s; }
inline Jet operator*(Jet a, double s) { return a *= s; }
inline Jet operator*(double s, Jet a) { return a *= s; }
inline Jet operator/(Jet a, double s) { return a /= s; }
inline Jet operator/(double s, const Jet& a) { return reciprocal(a) * s; }

inline Jet sin(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  std::vector<double> d(a.space()->order() + 1);
  const double cycle[4] = {s, c, -s, -c};
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = cycle[k % 4];
  return compose(a, d);
}

inline Jet cos(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  std::vector<double> d(a.space()->order() + 1);
  const double cycle[4] = {c, -s, -c, s};
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = cycle[k % 4];
  return compose(a, d);
}

inline Jet exp(const Jet& a) {
  std::vector<double> d(a.space()->order() + 1, std::exp(a.value()));
  return compose(a, d);
}

inline Jet log(const Jet& a) {
  const double x = a.value();
  std::vector<double> d(a.space()->order() + 1);
  d[0] = std::log(x);
  double f = 1.0 / x;
  for (std::size_t k = 1; k < d.size(); ++k) {
    d[k] = f;
    f *= -static_cast<double>(k) / x;
  }
  return compose(a, d);
}

/// a^p for real p; a.value() must be positive unless p is a nonnegative integer.
inline Jet pow(const Jet& a, double p) {
  const double x = a.value();
  std::vector<double> d(a.space()->order() + 1);
  double coef = 1.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double e = p - static_cast<double>(k);
    d[k] = coef == 0.0 ? 0.0 : coef * std::pow(x, e);
    coef *= e;
  }
  return compose(a, d);
}

inline Jet pow(const Jet& a, int p) {
  if (p < 0) return reciprocal(pow(a, -p));
  Jet r = Jet::constant(a.space(), 1.0);
  for (int k = 0; k < p; ++k) r = r * a;
  return r;
}

inline Jet sqrt(const Jet& a) { return pow(a, 0.5); }

inline Jet tanh(const Jet& a) {
  // derivatives of tanh are polynomials in t = tanh(x): P_{k+1}(t) = (1 - t^2) P_k'(t)
  const double t = std::tanh(a.value());
  const int order = a.space()->order();
  std::vector<double> d(order + 1);
  std::vector<double> poly{0.0, 1.0};  // P_0(t) = t
  for (int k = 0; k <= order; ++k) {
    double v = 0.0;
    for (std::size_t i = poly.size(); i-- > 0;) v = v * t + poly[i];
    d[k] = v;
    std::vector<double> dp(poly.size() > 1 ? poly.size() - 1 : 1, 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i) dp[i - 1] = static_cast<double>(i) * poly[i];
    std::vector<double> next(dp.size() + 2, 0.0);
    for (std::size_t i = 0; i < dp.size(); ++i) {
      next[i] += dp[i];
      next[i + 2] -= dp[i];
    }
    poly = std::move(next);
  }
  return compose(a, d);
}

}  // namespace esnoc
