#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

#include "stpq/normal.hpp"

namespace stpq {

/// Integration interval together with its weight function.
enum class WeightedInterval {
  unit_interval,       ///< [0,1], weight 1
  symmetric_interval,  ///< [-1,1], weight 1
  half_line,           ///< [0,inf), weight exp(-x)
  real_line,           ///< R, weight exp(-x^2)
};

std::string to_string(WeightedInterval domain);

template <typename Scalar = double>
Scalar total_mass(WeightedInterval domain) {
  switch (domain) {
    case WeightedInterval::unit_interval: return Scalar(1);
    case WeightedInterval::symmetric_interval: return Scalar(2);
    case WeightedInterval::half_line: return Scalar(1);
    case WeightedInterval::real_line: return Scalar(1) / std::numbers::inv_sqrtpi_v<Scalar>;
  }
  return Scalar(0);
}

template <typename Scalar>
bool contains(WeightedInterval domain, Scalar x) {
  switch (domain) {
    case WeightedInterval::unit_interval: return x >= Scalar(0) && x <= Scalar(1);
    case WeightedInterval::symmetric_interval: return x >= Scalar(-1) && x <= Scalar(1);
    case WeightedInterval::half_line: return x >= Scalar(0) && std::isfinite(double(x));
    case WeightedInterval::real_line: return std::isfinite(double(x));
  }
  return false;
}

/// One-dimensional quadrature rule: sum_i weights(i) * f(nodes(i)).
template <typename Scalar = double>
struct Rule1D {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  WeightedInterval domain = WeightedInterval::unit_interval;
  Vector nodes;
  Vector weights;
  int order = 0;  ///< polynomial degree integrated exactly
  bool nested = false;

  Eigen::Index size() const { return nodes.size(); }

  template <typename F>
  Scalar integrate(F&& f) const {
    Scalar acc(0);
    for (Eigen::Index i = 0; i < nodes.size(); ++i) acc += weights(i) * f(nodes(i));
    return acc;
  }
};

/// Three-term recurrence p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1} for monic
/// orthogonal polynomials; beta(0) is unused and mass is the measure's total mass.
template <typename Scalar = double>
struct Recurrence {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> alpha;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> beta;
  Scalar mass = Scalar(1);

  int size() const { return static_cast<int>(alpha.size()); }
};

/// Closed-form recurrence of the classical weight attached to `domain`
/// (Legendre, shifted Legendre, Laguerre, Hermite), first n coefficients.
template <typename Scalar = double>
Recurrence<Scalar> classical_recurrence(WeightedInterval domain, int n) {
  Recurrence<Scalar> rec;
  rec.alpha.setZero(n);
  rec.beta.setZero(n);
  rec.mass = total_mass<Scalar>(domain);
  for (int k = 0; k < n; ++k) {
    const Scalar kk(k);
    switch (domain) {
      case WeightedInterval::symmetric_interval:
        if (k > 0) rec.beta(k) = kk * kk / (Scalar(4) * kk * kk - Scalar(1));
        break;
      case WeightedInterval::unit_interval:
        rec.alpha(k) = Scalar(0.5);
        if (k > 0) rec.beta(k) = kk * kk / (Scalar(4) * (Scalar(4) * kk * kk - Scalar(1)));
        break;
      case WeightedInterval::half_line:
        rec.alpha(k) = Scalar(2) * kk + Scalar(1);
        if (k > 0) rec.beta(k) = kk * kk;
        break;
      case WeightedInterval::real_line:
        if (k > 0) rec.beta(k) = kk / Scalar(2);
        break;
    }
  }
  return rec;
}

namespace detail {

// Orthonormal polynomial sweep at x: returns the Christoffel sum
// sum_{k<n} p_k(x)^2 (as mantissa and binary exponent) and the Newton step
// q_n(x)/q_n'(x) where q_n is proportional to p_n.
template <typename Scalar>
struct Sweep {
  Scalar christoffel;
  int christoffel_exp2;
  Scalar newton_step;
};

template <typename Scalar>
Sweep<Scalar> orthonormal_sweep(const Recurrence<Scalar>& rec, int n, Scalar x) {
  using std::abs;
  using std::ldexp;
  using std::sqrt;
  Scalar p_prev(0), p(1), d_prev(0), d(0);
  Scalar sum(1);
  int exp2 = 0;
  const Scalar big = ldexp(Scalar(1), 400);
  const Scalar shrink = ldexp(Scalar(1), -400);
  Scalar q(0), dq(0);
  for (int k = 0; k < n; ++k) {
    const Scalar b_k = k > 0 ? sqrt(rec.beta(k)) : Scalar(0);
    q = (x - rec.alpha(k)) * p - b_k * p_prev;
    dq = p + (x - rec.alpha(k)) * d - b_k * d_prev;
    if (k + 1 == n) break;
    const Scalar b_next = sqrt(rec.beta(k + 1));
    p_prev = p;
    d_prev = d;
    p = q / b_next;
    d = dq / b_next;
    sum += p * p;
    if (abs(p) > big) {
      p *= shrink;
      p_prev *= shrink;
      d *= shrink;
      d_prev *= shrink;
      sum *= shrink * shrink;
      exp2 += 800;
    }
  }
  return {sum, exp2, dq != Scalar(0) ? q / dq : Scalar(0)};
}

}  // namespace detail

/// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix, polished by
/// Newton on the recurrence; weights come from the Christoffel function.
template <typename Scalar = double>
Rule1D<Scalar> golub_welsch(const Recurrence<Scalar>& rec, int n, WeightedInterval domain) {
  using std::abs;
  using std::sqrt;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (n < 1) throw std::invalid_argument("golub_welsch: need at least one node");
  if (rec.size() < n) throw std::invalid_argument("golub_welsch: recurrence too short");

  Rule1D<Scalar> rule;
  rule.domain = domain;
  rule.order = 2 * n - 1;
  rule.nested = false;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  if (n == 1) {
    rule.nodes(0) = rec.alpha(0);
  } else {
    Vector diag = rec.alpha.head(n);
    Vector sub(n - 1);
    for (int k = 1; k < n; ++k) {
      if (!(rec.beta(k) > Scalar(0)))
        throw std::runtime_error("golub_welsch: non-positive recurrence coefficient at n=" +
                                 std::to_string(n));
      sub(k - 1) = sqrt(rec.beta(k));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("golub_welsch: eigenvalue iteration failed for n=" +
                               std::to_string(n));
    rule.nodes = es.eigenvalues();
  }

  for (int i = 0; i < n; ++i) {
    Scalar x = rule.nodes(i);
    for (int it = 0; it < 2; ++it) {
      const Scalar step = detail::orthonormal_sweep(rec, n, x).newton_step;
      if (!(abs(step) < Scalar(1e-6) * (Scalar(1) + abs(x)))) break;
      x -= step;
    }
    rule.nodes(i) = x;
    const auto sw = detail::orthonormal_sweep(rec, n, x);
    using std::ldexp;
    rule.weights(i) = ldexp(rec.mass / sw.christoffel, -sw.christoffel_exp2);
  }
  return rule;
}

namespace detail {

// Mirror nodes/weights about `center` so symmetric rules are exactly symmetric.
template <typename Scalar>
void symmetrize(Rule1D<Scalar>& rule, Scalar center) {
  const Eigen::Index n = rule.size();
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    const Eigen::Index j = n - 1 - i;
    const Scalar half = (rule.nodes(j) - rule.nodes(i)) / Scalar(2);
    rule.nodes(i) = center - half;
    rule.nodes(j) = center + half;
    const Scalar w = (rule.weights(i) + rule.weights(j)) / Scalar(2);
    rule.weights(i) = w;
    rule.weights(j) = w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = center;
}

}  // namespace detail

/// Gaussian rule with n nodes for the weight attached to `domain`.
template <typename Scalar = double>
Rule1D<Scalar> gauss_rule(WeightedInterval domain, int n) {
  if (n < 1) throw std::invalid_argument("gauss_rule: n must be >= 1");
  auto rule = golub_welsch(classical_recurrence<Scalar>(domain, n), n, domain);
  switch (domain) {
    case WeightedInterval::symmetric_interval:
    case WeightedInterval::real_line: detail::symmetrize(rule, Scalar(0)); break;
    case WeightedInterval::unit_interval: detail::symmetrize(rule, Scalar(0.5)); break;
    case WeightedInterval::half_line: break;
  }
  return rule;
}

/// Clenshaw-Curtis rule on [-1,1] with 2^level + 1 nodes (one node at level 0).
template <typename Scalar = double>
Rule1D<Scalar> clenshaw_curtis(int level) {
  using std::cos;
  using std::sin;
  if (level < 0) throw std::invalid_argument("clenshaw_curtis: level must be >= 0");
  if (level > 24) throw std::invalid_argument("clenshaw_curtis: level too large");
  Rule1D<Scalar> rule;
  rule.domain = WeightedInterval::symmetric_interval;
  rule.nested = true;
  if (level == 0) {
    rule.nodes = Rule1D<Scalar>::Vector::Zero(1);
    rule.weights = Rule1D<Scalar>::Vector::Constant(1, Scalar(2));
    rule.order = 1;
    return rule;
  }
  const long N = 1L << level;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  rule.nodes.resize(N + 1);
  rule.weights.resize(N + 1);
  // x_j = sin(pi (2j - N) / (2N)): exactly nested across levels, x_{N/2} = 0.
  for (long j = 0; j <= N; ++j)
    rule.nodes(j) = sin(pi * (Scalar(2 * j - N) / Scalar(2 * N)));

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cos_table(N);
  for (long m = 0; m < N; ++m) cos_table(m) = cos(Scalar(2) * pi * Scalar(m) / Scalar(N));
  for (long j = 0; j <= N; ++j) {
    Scalar s(0);
    for (long k = 1; k <= N / 2; ++k) {
      const Scalar b = (k == N / 2) ? Scalar(1) : Scalar(2);
      s += b * cos_table((k * j) % N) / Scalar(4 * k * k - 1);
    }
    const Scalar c = (j == 0 || j == N) ? Scalar(1) : Scalar(2);
    rule.weights(j) = c / Scalar(N) * (Scalar(1) - s);
  }
  detail::symmetrize(rule, Scalar(0));
  rule.order = static_cast<int>(N) + 1;
  return rule;
}

/// Transformations for generalized Gaussian rules on [0,1].
enum class Psi {
  neg_log1m,      ///< -log(1-x)
  arcsinh_atanh,  ///< asinh(2 atanh(t)/pi), t = 2x-1
  inv_erf,        ///< erfinv(t), t = 2x-1
};

std::string to_string(Psi psi);

/// psi(x) for x in (0,1).
double psi_value(Psi psi, double x);

/// Inverse map y -> x with psi(x) = y.
double psi_inverse(Psi psi, double y);

/// Discrete Stieltjes procedure on the measure sum_i w_i delta(y_i), in
/// extended precision. Returns the first n monic recurrence coefficients.
Recurrence<long double> stieltjes(std::span<const long double> nodes,
                                  std::span<const long double> weights, int n);

/// Recurrence of the psi-pushforward of Lebesgue measure on [0,1] (cached).
const Recurrence<long double>& psi_recurrence(Psi psi);

/// Largest node count supported by the tabulated psi recurrences.
inline constexpr int kMaxGeneralizedGaussNodes = 130;

/// Gaussian rule on [0,1] exact for span{psi(x)^k : k <= 2n-1}.
Rule1D<double> generalized_gauss(Psi psi, int n);

/// Nodes of the generalized rule in psi-coordinates (strictly increasing).
Rule1D<double> generalized_gauss_psi_nodes(Psi psi, int n);

/// A leveled family of 1-D rules with the shared schedule n(0)=1, n(l)=2^l+1.
class RuleFamily1D {
 public:
  enum class Kind { clenshaw_curtis, gauss, generalized_gauss };

  static RuleFamily1D clenshaw_curtis();
  static RuleFamily1D gauss(WeightedInterval domain);
  static RuleFamily1D generalized_gauss(Psi psi);

  static int size_at_level(int level);

  Kind kind() const { return kind_; }
  WeightedInterval domain() const { return domain_; }
  Psi psi() const { return psi_; }
  bool nested() const { return kind_ == Kind::clenshaw_curtis; }
  std::string name() const;

  /// Rule at `level` (cached; safe to call concurrently).
  const Rule1D<double>& rule(int level) const;

 private:
  RuleFamily1D(Kind kind, WeightedInterval domain, Psi psi);

  struct Cache {
    std::mutex mutex;
    std::map<int, std::unique_ptr<Rule1D<double>>> rules;
  };

  Kind kind_;
  WeightedInterval domain_;
  Psi psi_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace stpq
