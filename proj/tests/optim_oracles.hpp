#pragma once

#include <cmath>
#include <vector>

namespace jarcast::testing {

// Element-by-element MADGRAD in double, written from the update rule.
struct MadgradOracle {
  std::vector<double> x0, s, nu;
  long k = 0;
  double lr, momentum, wd, eps;

  MadgradOracle(std::vector<double> x, double lr_, double mom, double wd_, double eps_)
      : x0(x), s(x.size(), 0.0), nu(x.size(), 0.0), lr(lr_), momentum(mom), wd(wd_), eps(eps_) {}

  void step(std::vector<double>& x, std::vector<double> g) {
    const double lam = lr * std::sqrt(double(k + 1));
    for (std::size_t i = 0; i < x.size(); ++i) {
      g[i] += wd * x[i];
      s[i] += lam * g[i];
      nu[i] += lam * g[i] * g[i];
      const double z = x0[i] - s[i] / (std::cbrt(nu[i]) + eps);
      x[i] = momentum * x[i] + (1.0 - momentum) * z;
    }
    ++k;
  }
};

struct AdamOracle {
  std::vector<double> m, v;
  long t = 0;
  double lr, b1, b2, eps;

  AdamOracle(std::size_t n, double lr_, double b1_, double b2_, double eps_)
      : m(n, 0.0), v(n, 0.0), lr(lr_), b1(b1_), b2(b2_), eps(eps_) {}

  void step(std::vector<double>& x, const std::vector<double>& g) {
    ++t;
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(b1, double(t)));
      const double vh = v[i] / (1 - std::pow(b2, double(t)));
      x[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
};

}  // namespace jarcast::testing
