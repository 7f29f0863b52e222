#include "stpq/rules1d.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace stpq {

std::string to_string(WeightedInterval domain) {
  switch (domain) {
    case WeightedInterval::unit_interval: return "unit_interval";
    case WeightedInterval::symmetric_interval: return "symmetric_interval";
    case WeightedInterval::half_line: return "half_line";
    case WeightedInterval::real_line: return "real_line";
  }
  return "unknown";
}

std::string to_string(Psi psi) {
  switch (psi) {
    case Psi::neg_log1m: return "neg_log1m";
    case Psi::arcsinh_atanh: return "arcsinh_atanh";
    case Psi::inv_erf: return "inv_erf";
  }
  return "unknown";
}

namespace {

double erfinv(double t) {
  // erf^{-1}(t) = Phi^{-1}((1+t)/2)/sqrt(2), then one Newton step on erf.
  double y = normal_icdf(0.5 * (1.0 + t)) / std::numbers::sqrt2;
  const double r = std::erf(y) - t;
  y -= r / (2.0 * std::numbers::inv_sqrtpi * std::exp(-y * y));
  return y;
}

}  // namespace

double psi_value(Psi psi, double x) {
  if (!(x > 0.0 && x < 1.0)) throw std::domain_error("psi_value: x must lie in (0,1)");
  switch (psi) {
    case Psi::neg_log1m: return -std::log1p(-x);
    case Psi::arcsinh_atanh: return std::asinh(2.0 * std::atanh(2.0 * x - 1.0) / std::numbers::pi);
    case Psi::inv_erf: return erfinv(2.0 * x - 1.0);
  }
  return 0.0;
}

double psi_inverse(Psi psi, double y) {
  switch (psi) {
    case Psi::neg_log1m: return -std::expm1(-y);
    case Psi::arcsinh_atanh: return 1.0 / (1.0 + std::exp(-std::numbers::pi * std::sinh(y)));
    case Psi::inv_erf: return 0.5 * std::erfc(-y);
  }
  return 0.0;
}

Recurrence<long double> stieltjes(std::span<const long double> nodes,
                                  std::span<const long double> weights, int n) {
  if (nodes.size() != weights.size()) throw std::invalid_argument("stieltjes: size mismatch");
  if (n < 1 || static_cast<std::size_t>(n) > nodes.size())
    throw std::invalid_argument("stieltjes: need 1 <= n <= number of support points");
  const std::size_t m = nodes.size();
  Recurrence<long double> rec;
  rec.alpha.setZero(n);
  rec.beta.setZero(n);
  long double mass = 0;
  for (long double w : weights) mass += w;
  rec.mass = mass;

  // Orthonormal sweep; alpha/beta are the monic coefficients.
  std::vector<long double> p_prev(m, 0.0L), p(m, 1.0L / std::sqrt(mass)), q(m);
  for (int k = 0; k < n; ++k) {
    long double a = 0;
    for (std::size_t i = 0; i < m; ++i) a += weights[i] * nodes[i] * p[i] * p[i];
    rec.alpha(k) = a;
    if (k + 1 == n) break;
    const long double b = k > 0 ? std::sqrt(rec.beta(k)) : 0.0L;
    long double norm2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
      q[i] = (nodes[i] - a) * p[i] - b * p_prev[i];
      norm2 += weights[i] * q[i] * q[i];
    }
    if (!(norm2 > 0.0L) || !std::isfinite(norm2))
      throw std::runtime_error("stieltjes: orthogonalization broke down at n=" +
                               std::to_string(k + 1));
    rec.beta(k + 1) = norm2;
    const long double s = 1.0L / std::sqrt(norm2);
    for (std::size_t i = 0; i < m; ++i) {
      p_prev[i] = p[i];
      p[i] = q[i] * s;
    }
  }
  return rec;
}

namespace {

Recurrence<long double> arcsinh_recurrence() {
  // psi-pushforward density on R: (pi/4) cosh y / cosh^2((pi/2) sinh y).
  const long double h = 1.0L / 64.0L;
  const int half = 7 * 64;
  std::vector<long double> y, w;
  y.reserve(2 * half + 1);
  w.reserve(2 * half + 1);
  const long double pi = std::numbers::pi_v<long double>;
  for (int i = -half; i <= half; ++i) {
    const long double t = h * i;
    const long double c = std::cosh(0.5L * pi * std::sinh(t));
    y.push_back(t);
    w.push_back(h * 0.25L * pi * std::cosh(t) / (c * c));
  }
  auto rec = stieltjes(y, w, kMaxGeneralizedGaussNodes);
  rec.alpha.setZero();  // symmetric measure
  rec.mass = 1.0L;
  return rec;
}

Recurrence<long double> make_psi_recurrence(Psi psi) {
  switch (psi) {
    case Psi::neg_log1m:
      return classical_recurrence<long double>(WeightedInterval::half_line,
                                               kMaxGeneralizedGaussNodes);
    case Psi::inv_erf: {
      auto rec = classical_recurrence<long double>(WeightedInterval::real_line,
                                                   kMaxGeneralizedGaussNodes);
      rec.mass = 1.0L;
      return rec;
    }
    case Psi::arcsinh_atanh: return arcsinh_recurrence();
  }
  throw std::invalid_argument("unknown psi");
}

}  // namespace

const Recurrence<long double>& psi_recurrence(Psi psi) {
  static std::array<std::once_flag, 3> flags;
  static std::array<Recurrence<long double>, 3> cache;
  const auto i = static_cast<std::size_t>(psi);
  std::call_once(flags.at(i), [&] { cache[i] = make_psi_recurrence(psi); });
  return cache[i];
}

Rule1D<double> generalized_gauss_psi_nodes(Psi psi, int n) {
  if (n < 1) throw std::invalid_argument("generalized_gauss: n must be >= 1");
  if (n > kMaxGeneralizedGaussNodes)
    throw std::runtime_error("generalized_gauss: recurrence not available for n=" +
                             std::to_string(n));
  auto ly = golub_welsch(psi_recurrence(psi), n, WeightedInterval::real_line);
  if (psi != Psi::neg_log1m) detail::symmetrize(ly, 0.0L);
  Rule1D<double> rule;
  rule.domain = psi == Psi::neg_log1m ? WeightedInterval::half_line : WeightedInterval::real_line;
  rule.nodes = ly.nodes.cast<double>();
  rule.weights = ly.weights.cast<double>();
  rule.order = 2 * n - 1;
  return rule;
}

Rule1D<double> generalized_gauss(Psi psi, int n) {
  const auto ly = generalized_gauss_psi_nodes(psi, n);
  Rule1D<double> rule = ly;
  rule.domain = WeightedInterval::unit_interval;
  for (int i = 0; i < n; ++i) rule.nodes(i) = psi_inverse(psi, ly.nodes(i));
  if (psi != Psi::neg_log1m) {
    for (int i = 0; i < n / 2; ++i) rule.nodes(n - 1 - i) = 1.0 - rule.nodes(i);
    if (n % 2 == 1) rule.nodes(n / 2) = 0.5;
  }
  return rule;
}

RuleFamily1D::RuleFamily1D(Kind kind, WeightedInterval domain, Psi psi)
    : kind_(kind), domain_(domain), psi_(psi), cache_(std::make_shared<Cache>()) {}

RuleFamily1D RuleFamily1D::clenshaw_curtis() {
  return {Kind::clenshaw_curtis, WeightedInterval::symmetric_interval, Psi::neg_log1m};
}

RuleFamily1D RuleFamily1D::gauss(WeightedInterval domain) {
  return {Kind::gauss, domain, Psi::neg_log1m};
}

RuleFamily1D RuleFamily1D::generalized_gauss(Psi psi) {
  return {Kind::generalized_gauss, WeightedInterval::unit_interval, psi};
}

int RuleFamily1D::size_at_level(int level) {
  if (level < 0) throw std::invalid_argument("size_at_level: negative level");
  if (level > 30) throw std::overflow_error("size_at_level: level too large");
  return level == 0 ? 1 : (1 << level) + 1;
}

std::string RuleFamily1D::name() const {
  switch (kind_) {
    case Kind::clenshaw_curtis: return "clenshaw_curtis";
    case Kind::gauss: return "gauss_" + to_string(domain_);
    case Kind::generalized_gauss: return "generalized_gauss_" + to_string(psi_);
  }
  return "unknown";
}

const Rule1D<double>& RuleFamily1D::rule(int level) const {
  std::lock_guard lock(cache_->mutex);
  auto& slot = cache_->rules[level];
  if (!slot) {
    const int n = size_at_level(level);
    switch (kind_) {
      case Kind::clenshaw_curtis:
        slot = std::make_unique<Rule1D<double>>(stpq::clenshaw_curtis<double>(level));
        break;
      case Kind::gauss:
        slot = std::make_unique<Rule1D<double>>(gauss_rule<double>(domain_, n));
        break;
      case Kind::generalized_gauss:
        slot = std::make_unique<Rule1D<double>>(stpq::generalized_gauss(psi_, n));
        break;
    }
  }
  return *slot;
}

}  // namespace stpq
