#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace swingid {

/// Forward-mode scalar carrying a value and a vector of directional
/// derivatives. All duals in one evaluation share the same direction count.
class Dual {
  public:
    Dual() = default;
    Dual(double value, std::size_t dirs) : v_(value), d_(dirs, 0.0) {}

    static Dual constant(double value, std::size_t dirs) { return Dual(value, dirs); }
    static Dual seeded(double value, std::size_t dirs, std::size_t dir) {
        Dual x(value, dirs);
        x.d_[dir] = 1.0;
        return x;
    }

    double value() const { return v_; }
    std::size_t dirs() const { return d_.size(); }
    double deriv(std::size_t i) const { return d_[i]; }
    const std::vector<double>& grad() const { return d_; }

    Dual& operator+=(const Dual& o) {
        v_ += o.v_;
        for (std::size_t i = 0; i < d_.size(); ++i) d_[i] += o.d_[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v_ -= o.v_;
        for (std::size_t i = 0; i < d_.size(); ++i) d_[i] -= o.d_[i];
        return *this;
    }
    Dual& operator+=(double c) {
        v_ += c;
        return *this;
    }
    Dual& operator-=(double c) {
        v_ -= c;
        return *this;
    }
    Dual& operator*=(double c) {
        v_ *= c;
        for (double& g : d_) g *= c;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator+(Dual a, double c) { return a += c; }
    friend Dual operator+(double c, Dual a) { return a += c; }
    friend Dual operator-(Dual a, double c) { return a -= c; }
    friend Dual operator-(double c, const Dual& a) {
        Dual r = -a;
        return r += c;
    }
    friend Dual operator-(const Dual& a) {
        Dual r = a;
        r.v_ = -r.v_;
        for (double& g : r.d_) g = -g;
        return r;
    }

    friend Dual operator*(const Dual& a, const Dual& b) {
        Dual r(a.v_ * b.v_, a.d_.size());
        for (std::size_t i = 0; i < r.d_.size(); ++i) r.d_[i] = a.d_[i] * b.v_ + a.v_ * b.d_[i];
        return r;
    }
    friend Dual operator*(Dual a, double c) { return a *= c; }
    friend Dual operator*(double c, Dual a) { return a *= c; }

    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r(a.v_ / b.v_, a.d_.size());
        const double inv = 1.0 / b.v_;
        for (std::size_t i = 0; i < r.d_.size(); ++i) r.d_[i] = (a.d_[i] - r.v_ * b.d_[i]) * inv;
        return r;
    }
    friend Dual operator/(Dual a, double c) { return a *= (1.0 / c); }
    friend Dual operator/(double c, const Dual& b) {
        Dual r(c / b.v_, b.d_.size());
        const double f = -r.v_ / b.v_;
        for (std::size_t i = 0; i < r.d_.size(); ++i) r.d_[i] = f * b.d_[i];
        return r;
    }

    friend Dual sin(const Dual& a) {
        Dual r(std::sin(a.v_), a.d_.size());
        const double c = std::cos(a.v_);
        for (std::size_t i = 0; i < r.d_.size(); ++i) r.d_[i] = c * a.d_[i];
        return r;
    }
    friend Dual cos(const Dual& a) {
        Dual r(std::cos(a.v_), a.d_.size());
        const double s = -std::sin(a.v_);
        for (std::size_t i = 0; i < r.d_.size(); ++i) r.d_[i] = s * a.d_[i];
        return r;
    }

  private:
    double v_ = 0.0;
    std::vector<double> d_;
};

namespace detail {

// Scalar shims so templated numeric code works on double and Dual alike.
inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value(); }
template <typename T>
T scalar_like(double value, const T& like);
template <>
inline double scalar_like<double>(double value, const double&) {
    return value;
}
template <>
inline Dual scalar_like<Dual>(double value, const Dual& like) {
    return Dual::constant(value, like.dirs());
}

}  // namespace detail

}  // namespace swingid
