#include "stpq/cubature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

#include "stpq/normal.hpp"

namespace stpq {

namespace {
#include "sobol_directions.inc"

constexpr std::array<unsigned, kMaxHaltonDim> kPrimes = {
    2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,  53,
    59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double map_uniform(double u, Domain domain) {
  switch (domain) {
    case Domain::unit_cube: return u;
    case Domain::gaussian: return normal_icdf(u);
    case Domain::laguerre: return -std::log1p(-u);
  }
  return u;
}

void check_level(int level) {
  if (level < 1) throw std::invalid_argument("cubature level must be >= 1");
  if (level > 30) throw std::overflow_error("cubature level too large");
}

PointSet<double> uniform_set(int d, Eigen::Index n) {
  PointSet<double> ps;
  ps.points.resize(d, n);
  ps.weights = Eigen::VectorXd::Constant(n, 1.0 / double(n));
  return ps;
}

}  // namespace

std::string to_string(Domain domain) {
  switch (domain) {
    case Domain::unit_cube: return "unit_cube";
    case Domain::gaussian: return "gaussian";
    case Domain::laguerre: return "laguerre";
  }
  return "unknown";
}

std::string to_string(CubatureFamily::Kind kind) {
  using K = CubatureFamily::Kind;
  switch (kind) {
    case K::mc: return "mc";
    case K::sobol: return "sobol";
    case K::halton: return "halton";
    case K::frolov: return "frolov";
    case K::smolyak: return "smolyak";
    case K::product: return "product";
    case K::optimal_weights: return "optimal_weights";
  }
  return "unknown";
}

// --- MC / QMC ---------------------------------------------------------------

PointSet<double> mc_points(int d, int level, std::uint64_t seed, Domain domain,
                           std::uint64_t stream) {
  if (d < 1) throw std::invalid_argument("mc_points: d must be >= 1");
  check_level(level);
  const Eigen::Index n = Eigen::Index(1) << level;
  auto ps = uniform_set(d, n);
  std::seed_seq sseq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                     std::uint32_t(stream >> 32)};
  std::mt19937_64 engine(sseq);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      const double u = (double(engine() >> 11) + 0.5) * 0x1p-53;
      ps.points(j, i) = map_uniform(u, domain);
    }
  return ps;
}

PointSet<double> sobol_points(int d, int level, Domain domain) {
  if (d < 1 || d > kMaxSobolDim)
    throw std::invalid_argument("sobol_points: dimension " + std::to_string(d) +
                                " exceeds the direction-number table (max " +
                                std::to_string(kMaxSobolDim) + ")");
  check_level(level);
  std::vector<std::array<std::uint32_t, 32>> v(d);
  for (int k = 0; k < d; ++k) {
    const std::uint32_t poly = kSobolDirections[k].poly;
    if (k == 0) {
      for (int j = 0; j < 32; ++j) v[k][j] = 1u << (31 - j);
      continue;
    }
    const int s = std::bit_width(poly) - 1;
    for (int j = 0; j < s; ++j) v[k][j] = kSobolDirections[k].m[j] << (31 - j);
    for (int j = s; j < 32; ++j) {
      std::uint32_t x = v[k][j - s] ^ (v[k][j - s] >> s);
      for (int i = 1; i < s; ++i)
        if ((poly >> (s - i)) & 1u) x ^= v[k][j - i];
      v[k][j] = x;
    }
  }
  const Eigen::Index n = Eigen::Index(1) << level;
  auto ps = uniform_set(d, n);
  for (Eigen::Index i = 1; i <= n; ++i) {
    const std::uint64_t g = std::uint64_t(i) ^ (std::uint64_t(i) >> 1);
    for (int k = 0; k < d; ++k) {
      std::uint32_t x = 0;
      for (int b = 0; b < 32; ++b)
        if ((g >> b) & 1u) x ^= v[k][b];
      ps.points(k, i - 1) = map_uniform(double(x) * 0x1p-32, domain);
    }
  }
  return ps;
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double r = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    r += double(index % base) * f;
    index /= base;
    f /= base;
  }
  return r;
}

PointSet<double> halton_points(int d, int level, Domain domain) {
  if (d < 1 || d > kMaxHaltonDim)
    throw std::invalid_argument("halton_points: dimension " + std::to_string(d) +
                                " exceeds the prime table (max " + std::to_string(kMaxHaltonDim) + ")");
  check_level(level);
  const Eigen::Index n = Eigen::Index(1) << level;
  auto ps = uniform_set(d, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k)
      ps.points(k, i) = map_uniform(radical_inverse(std::uint64_t(i + 1), kPrimes[k]), domain);
  return ps;
}

// --- Frolov -----------------------------------------------------------------

Eigen::VectorXd frolov_roots(int d) {
  if (d < 1 || d > 4) throw std::invalid_argument("frolov: unsupported dimension " + std::to_string(d));
  // coefficients of prod (x - (2j-1)) - 1, lowest degree first
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d + 1);
  c(0) = 1.0;
  for (int j = 1; j <= d; ++j) {
    const double a = 2.0 * j - 1.0;
    Eigen::VectorXd next = Eigen::VectorXd::Zero(d + 1);
    for (int i = 0; i < j; ++i) {
      next(i + 1) += c(i);
      next(i) -= a * c(i);
    }
    c = next;
  }
  c(0) -= 1.0;
  auto eval = [&](double x) {
    double p = 0.0, dp = 0.0;
    for (int i = d; i >= 0; --i) {
      dp = dp * x + p;
      p = p * x + c(i);
    }
    return std::pair{p, dp};
  };
  Eigen::VectorXd roots(d);
  if (d == 1) {
    roots(0) = -c(0);
  } else {
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
    for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) comp(i, d - 1) = -c(i);
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    for (int i = 0; i < d; ++i) roots(i) = es.eigenvalues()(i).real();
  }
  for (int i = 0; i < d; ++i)
    for (int it = 0; it < 4; ++it) {
      const auto [p, dp] = eval(roots(i));
      if (dp == 0.0) break;
      roots(i) -= p / dp;
    }
  std::sort(roots.data(), roots.data() + d);
  return roots;
}

namespace {

// LLL reduction of the columns of B (delta = 0.99).
void lll_reduce(Eigen::MatrixXd& B) {
  const int n = static_cast<int>(B.cols());
  auto gram_schmidt = [&](Eigen::MatrixXd& Bs, Eigen::MatrixXd& mu) {
    Bs = B;
    mu.setZero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        mu(i, j) = B.col(i).dot(Bs.col(j)) / Bs.col(j).squaredNorm();
        Bs.col(i) -= mu(i, j) * Bs.col(j);
      }
  };
  Eigen::MatrixXd Bs, mu;
  gram_schmidt(Bs, mu);
  int k = 1;
  for (int guard = 0; k < n && guard < 10000; ++guard) {
    for (int j = k - 1; j >= 0; --j) {
      const double r = std::round(mu(k, j));
      if (r != 0.0) {
        B.col(k) -= r * B.col(j);
        gram_schmidt(Bs, mu);
      }
    }
    if (Bs.col(k).squaredNorm() >= (0.99 - mu(k, k - 1) * mu(k, k - 1)) * Bs.col(k - 1).squaredNorm()) {
      ++k;
    } else {
      B.col(k).swap(B.col(k - 1));
      gram_schmidt(Bs, mu);
      k = std::max(k - 1, 1);
    }
  }
}

std::vector<Eigen::VectorXd> frolov_enumerate(const Eigen::MatrixXd& B) {
  const int d = static_cast<int>(B.cols());
  const Eigen::MatrixXd Binv = B.inverse();
  Eigen::VectorXi lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    double a = 0.0, b = 0.0;
    for (int j = 0; j < d; ++j) {
      a += std::min(0.0, Binv(i, j));
      b += std::max(0.0, Binv(i, j));
    }
    lo(i) = static_cast<int>(std::floor(a));
    hi(i) = static_cast<int>(std::ceil(b));
  }
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXi k = lo;
  Eigen::VectorXd x(d);
  while (true) {
    // interval for the last coordinate given the first d-1
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
    for (int i = 0; i + 1 < d; ++i) c += B.col(i) * double(k(i));
    double kmin = -1e300, kmax = 1e300;
    bool feasible = true;
    for (int j = 0; j < d; ++j) {
      const double b = B(j, d - 1);
      if (b > 0.0) {
        kmin = std::max(kmin, -c(j) / b);
        kmax = std::min(kmax, (1.0 - c(j)) / b);
      } else if (b < 0.0) {
        kmin = std::max(kmin, (1.0 - c(j)) / b);
        kmax = std::min(kmax, -c(j) / b);
      } else if (!(c(j) > 0.0 && c(j) < 1.0)) {
        feasible = false;
      }
    }
    if (feasible && kmin <= kmax) {
      for (long long t = static_cast<long long>(std::floor(kmin));
           t <= static_cast<long long>(std::ceil(kmax)); ++t) {
        x = c + B.col(d - 1) * double(t);
        if ((x.array() > 0.0).all() && (x.array() < 1.0).all()) out.push_back(x);
      }
    }
    int i = 0;
    for (; i + 1 < d; ++i) {
      if (k(i) < hi(i)) {
        ++k(i);
        break;
      }
      k(i) = lo(i);
    }
    if (i + 1 >= d) break;
  }
  std::sort(out.begin(), out.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  return out;
}

}  // namespace

Eigen::MatrixXd frolov_generator(int d) {
  const Eigen::VectorXd xi = frolov_roots(d);
  Eigen::MatrixXd G(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) G(j, i) = std::pow(xi(j), i);
  G /= std::pow(std::abs(G.determinant()), 1.0 / d);
  lll_reduce(G);
  return G;
}

PointSet<double> frolov_points(int d, int level) {
  check_level(level);
  const Eigen::MatrixXd G = frolov_generator(d);
  const double target = std::ldexp(1.0, level);
  double log_a = -double(level) / d;
  auto count_at = [&](double la) { return frolov_enumerate(std::exp2(la) * G); };
  auto pts = count_at(log_a);
  auto in_band = [&](std::size_t n) { return double(n) >= target / 2 && double(n) <= 2 * target; };
  if (!in_band(pts.size())) {
    // bisect the dilation in log2 scale until the count is within a factor two
    double lo = log_a - 1.0, hi = log_a + 1.0;
    for (int it = 0; it < 60 && !in_band(pts.size()); ++it) {
      log_a = 0.5 * (lo + hi);
      pts = count_at(log_a);
      if (double(pts.size()) < target) hi = log_a;
      else lo = log_a;
    }
    if (!in_band(pts.size()))
      throw std::runtime_error("frolov_points: could not reach the target point count");
  }
  PointSet<double> ps;
  ps.points.resize(d, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) ps.points.col(Eigen::Index(i)) = pts[i];
  ps.weights = Eigen::VectorXd::Constant(ps.size(), std::exp2(d * log_a));
  return ps;
}

// --- sparse and product grids -------------------------------------------------

Domain rule_domain(const RuleFamily1D& rule) {
  switch (rule.domain()) {
    case WeightedInterval::unit_interval:
    case WeightedInterval::symmetric_interval: return Domain::unit_cube;
    case WeightedInterval::half_line: return Domain::laguerre;
    case WeightedInterval::real_line: return Domain::gaussian;
  }
  return Domain::unit_cube;
}

namespace {

struct MappedRule {
  std::vector<double> nodes, weights;
  std::vector<int> intro;  // level at which a nested node first appears
};

MappedRule mapped_rule(const RuleFamily1D& family, int level) {
  const auto& r = family.rule(level);
  MappedRule m;
  const auto n = r.size();
  m.nodes.resize(n);
  m.weights.resize(n);
  m.intro.assign(n, level);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = r.nodes(i), w = r.weights(i);
    switch (r.domain) {
      case WeightedInterval::symmetric_interval:
        x = 0.5 * (x + 1.0);
        w *= 0.5;
        break;
      case WeightedInterval::real_line:
        x *= std::numbers::sqrt2;
        w *= std::numbers::inv_sqrtpi;
        break;
      default: break;
    }
    m.nodes[i] = x;
    m.weights[i] = w;
  }
  if (family.nested()) {
    const long N = long(n) - 1;
    for (long j = 0; j <= N; ++j) {
      if (level == 0 || 2 * j == N) m.intro[j] = 0;
      else if (j == 0 || j == N) m.intro[j] = 1;
      else m.intro[j] = level - std::countr_zero(static_cast<unsigned long>(j));
    }
  }
  return m;
}

enum class Order { lex, intro_sum, intro_max };

struct Accum {
  double weight = 0.0;
  int intro_key = 0;
};

using PointKey = std::vector<double>;

void add_tensor(std::map<PointKey, Accum>& acc, const std::vector<const MappedRule*>& rules,
                double coeff, Order order) {
  const int d = static_cast<int>(rules.size());
  std::vector<std::size_t> idx(d, 0);
  PointKey key(d);
  while (true) {
    double w = coeff;
    int ikey = 0;
    for (int j = 0; j < d; ++j) {
      key[j] = rules[j]->nodes[idx[j]];
      w *= rules[j]->weights[idx[j]];
      const int in = rules[j]->intro[idx[j]];
      ikey = order == Order::intro_max ? std::max(ikey, in) : ikey + in;
    }
    auto [it, fresh] = acc.try_emplace(key);
    it->second.weight += w;
    if (fresh) it->second.intro_key = ikey;
    int j = 0;
    for (; j < d; ++j) {
      if (++idx[j] < rules[j]->nodes.size()) break;
      idx[j] = 0;
    }
    if (j == d) break;
  }
}

PointSet<double> to_point_set(const std::map<PointKey, Accum>& acc, int d, Order order) {
  std::vector<const std::pair<const PointKey, Accum>*> items;
  items.reserve(acc.size());
  for (const auto& kv : acc) items.push_back(&kv);
  if (order != Order::lex)
    std::stable_sort(items.begin(), items.end(),
                     [](auto* a, auto* b) { return a->second.intro_key < b->second.intro_key; });
  PointSet<double> ps;
  ps.points.resize(d, Eigen::Index(items.size()));
  ps.weights.resize(Eigen::Index(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (int j = 0; j < d; ++j) ps.points(j, Eigen::Index(i)) = items[i]->first[j];
    ps.weights(Eigen::Index(i)) = items[i]->second.weight;
  }
  return ps;
}

PointSet<double> combination_impl(const RuleFamily1D& rule,
                                  const std::vector<std::vector<int>>& indices, int d, Order order) {
  std::set<std::vector<int>> members(indices.begin(), indices.end());
  std::map<int, MappedRule> rules;
  std::map<PointKey, Accum> acc;
  for (const auto& k : indices) {
    // combination coefficient: sum over e in {0,1}^d with k+e in the set
    int coeff = 0;
    std::vector<int> ke(d);
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      for (int j = 0; j < d; ++j) ke[j] = k[j] + int((mask >> j) & 1u);
      if (members.count(ke)) coeff += (std::popcount(mask) % 2 == 0) ? 1 : -1;
    }
    if (coeff == 0) continue;
    std::vector<const MappedRule*> rs(d);
    for (int j = 0; j < d; ++j) {
      auto it = rules.find(k[j]);
      if (it == rules.end()) it = rules.emplace(k[j], mapped_rule(rule, k[j])).first;
      rs[j] = &it->second;
    }
    add_tensor(acc, rs, double(coeff), order);
  }
  return to_point_set(acc, d, order);
}

void simplex_indices(int d, int budget, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (int(cur.size()) == d) {
    out.push_back(cur);
    return;
  }
  for (int k = 0; k <= budget; ++k) {
    cur.push_back(k);
    simplex_indices(d, budget - k, cur, out);
    cur.pop_back();
  }
}

}  // namespace

PointSet<double> combination_points(const RuleFamily1D& rule,
                                    const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& index_set) {
  const int d = static_cast<int>(index_set.rows());
  if (d < 1 || index_set.cols() < 1) throw std::invalid_argument("combination_points: empty index set");
  std::vector<std::vector<int>> idx;
  std::set<std::vector<int>> members;
  for (Eigen::Index c = 0; c < index_set.cols(); ++c) {
    std::vector<int> k(index_set.col(c).data(), index_set.col(c).data() + d);
    if (*std::min_element(k.begin(), k.end()) < 0)
      throw std::invalid_argument("combination_points: negative index");
    idx.push_back(k);
    members.insert(k);
  }
  for (const auto& k : idx)
    for (int j = 0; j < d; ++j)
      if (k[j] > 0) {
        auto km = k;
        --km[j];
        if (!members.count(km)) throw std::invalid_argument("combination_points: index set not downward closed");
      }
  return combination_impl(rule, idx, d, rule.nested() ? Order::intro_sum : Order::lex);
}

PointSet<double> smolyak_points(const RuleFamily1D& rule, int d, int level) {
  if (d < 1) throw std::invalid_argument("smolyak_points: d must be >= 1");
  if (level < 0) throw std::invalid_argument("smolyak_points: level must be >= 0");
  std::vector<std::vector<int>> idx;
  std::vector<int> cur;
  simplex_indices(d, level, cur, idx);
  return combination_impl(rule, idx, d, rule.nested() ? Order::intro_sum : Order::lex);
}

PointSet<double> product_points(const RuleFamily1D& rule, int d, int level) {
  if (d < 1) throw std::invalid_argument("product_points: d must be >= 1");
  if (level < 0) throw std::invalid_argument("product_points: level must be >= 0");
  const double n = RuleFamily1D::size_at_level(level);
  if (std::pow(n, d) > 1e7)
    throw std::overflow_error("product_points: " + std::to_string(d) + "-fold grid at level " +
                              std::to_string(level) + " exceeds 1e7 points");
  const auto m = mapped_rule(rule, level);
  std::map<PointKey, Accum> acc;
  add_tensor(acc, std::vector<const MappedRule*>(d, &m), 1.0, rule.nested() ? Order::intro_max : Order::lex);
  return to_point_set(acc, d, rule.nested() ? Order::intro_max : Order::lex);
}

// --- optimal weights ----------------------------------------------------------

double ow_kernel(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                 int r) {
  double k = 1.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double m = std::min(x(j), y(j)), M = std::max(x(j), y(j));
    k *= r == 1 ? 1.0 + m : 1.0 + x(j) * y(j) + 0.5 * m * m * M - m * m * m / 6.0;
  }
  return k;
}

double ow_kernel_mean(const Eigen::Ref<const Eigen::VectorXd>& x, int r) {
  double b = 1.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double t = x(j);
    b *= r == 1 ? 1.0 + t - 0.5 * t * t
                : 1.0 + t / 2.0 + t * t / 4.0 - t * t * t / 6.0 + t * t * t * t / 24.0;
  }
  return b;
}

PointSet<double> optimal_weights(const Eigen::MatrixXd& points, int r) {
  if (r != 1 && r != 2) throw std::invalid_argument("optimal_weights: smoothness must be 1 or 2");
  const Eigen::Index n = points.cols();
  if (n < 1) throw std::invalid_argument("optimal_weights: no points");
  if (n > 4096) throw std::invalid_argument("optimal_weights: more than 4096 points");
  if ((points.array() < 0.0).any() || (points.array() > 1.0).any())
    throw std::invalid_argument("optimal_weights: points must lie in [0,1]^d");
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  const auto col = [&](Eigen::Index j) { return std::vector<double>(points.col(j).data(), points.col(j).data() + points.rows()); };
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return col(a) < col(b); });
  for (Eigen::Index i = 1; i < n; ++i)
    if (points.col(order[i]) == points.col(order[i - 1]))
      throw std::invalid_argument("optimal_weights: duplicate nodes; jitter the nodes or drop repeats");
  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(i) = ow_kernel_mean(points.col(i), r);
    for (Eigen::Index j = 0; j <= i; ++j) K(i, j) = K(j, i) = ow_kernel(points.col(i), points.col(j), r);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  Eigen::MatrixXd Kreg;
  const Eigen::MatrixXd* A = &K;
  if (llt.info() != Eigen::Success) {
    Kreg = K;
    Kreg.diagonal().array() += 1e-12 * K.trace() / double(n);
    llt.compute(Kreg);
    A = &Kreg;
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("optimal_weights: kernel matrix is not positive definite; jitter the nodes or use fewer points");
  }
  if (llt.rcond() < 1e-14)
    throw std::runtime_error("optimal_weights: kernel matrix condition estimate exceeds 1e14; jitter the nodes or use fewer points");
  Eigen::VectorXd w = llt.solve(b);
  for (int it = 0; it < 2; ++it) w += llt.solve(b - *A * w);
  PointSet<double> ps;
  ps.points = points;
  ps.weights = w;
  return ps;
}

void write_point_set(std::ostream& os, const PointSet<double>& ps) {
  char buf[32];
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    for (Eigen::Index j = 0; j < ps.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ps.points(j, i));
      os << buf << ' ';
    }
    std::snprintf(buf, sizeof buf, "%.17g", ps.weights(i));
    os << buf << '\n';
  }
}

// --- families -----------------------------------------------------------------

CubatureFamily::CubatureFamily(Kind kind, int d, Domain domain)
    : kind_(kind), dim_(d), domain_(domain), cache_(std::make_shared<Cache>()) {
  if (d < 1) throw std::invalid_argument("cubature family: dimension must be >= 1");
}

CubatureFamily CubatureFamily::mc(int d, Domain domain) {
  CubatureFamily f(Kind::mc, d, domain);
  f.rates_ = {0.5, 0.0, 0};
  return f;
}

CubatureFamily CubatureFamily::sobol(int d, Domain domain) {
  if (d > kMaxSobolDim) throw std::invalid_argument("sobol: dimension exceeds table");
  CubatureFamily f(Kind::sobol, d, domain);
  f.rates_ = {1.0, double(d), 0};
  return f;
}

CubatureFamily CubatureFamily::halton(int d, Domain domain) {
  if (d > kMaxHaltonDim) throw std::invalid_argument("halton: dimension exceeds table");
  CubatureFamily f(Kind::halton, d, domain);
  f.rates_ = {1.0, double(d), 0};
  return f;
}

CubatureFamily CubatureFamily::frolov(int d, int r) {
  if (d < 1 || d > 4) throw std::invalid_argument("frolov: unsupported dimension " + std::to_string(d));
  CubatureFamily f(Kind::frolov, d, Domain::unit_cube);
  f.r_ = r;
  f.rates_ = {double(r), 0.5 * (d - 1), 0};
  return f;
}

CubatureFamily CubatureFamily::smolyak(const RuleFamily1D& rule, int d, int r) {
  CubatureFamily f(Kind::smolyak, d, rule_domain(rule));
  f.r_ = r;
  f.rule_ = std::make_shared<RuleFamily1D>(rule);
  f.rates_ = {double(r), (d - 1) * (r + 0.5), d - 1};
  return f;
}

CubatureFamily CubatureFamily::product(const RuleFamily1D& rule, int d, int r) {
  CubatureFamily f(Kind::product, d, rule_domain(rule));
  f.r_ = r;
  f.rule_ = std::make_shared<RuleFamily1D>(rule);
  f.rates_ = {double(r) / d, 0.0, 0};
  return f;
}

CubatureFamily CubatureFamily::optimal_weights(Kind base, int d, int r) {
  if (base != Kind::mc && base != Kind::sobol)
    throw std::invalid_argument("optimal_weights: base must be mc or sobol");
  if (r != 1 && r != 2) throw std::invalid_argument("optimal_weights: smoothness must be 1 or 2");
  CubatureFamily f(Kind::optimal_weights, d, Domain::unit_cube);
  f.base_ = base;
  f.r_ = r;
  f.rates_ = {double(r), double(r * d), 0};
  return f;
}

bool CubatureFamily::randomized() const {
  return kind_ == Kind::mc || (kind_ == Kind::optimal_weights && base_ == Kind::mc);
}

bool CubatureFamily::nested() const {
  switch (kind_) {
    case Kind::mc:
    case Kind::sobol:
    case Kind::halton:
    case Kind::optimal_weights: return true;
    case Kind::frolov: return false;
    case Kind::smolyak:
    case Kind::product: return rule_->nested();
  }
  return false;
}

std::string CubatureFamily::name() const {
  switch (kind_) {
    case Kind::smolyak:
    case Kind::product: return to_string(kind_) + "(" + rule_->name() + ")";
    case Kind::optimal_weights: return "optimal_weights(" + to_string(base_) + ",r=" + std::to_string(r_) + ")";
    default: return to_string(kind_);
  }
}

CubatureFamily CubatureFamily::with_seed(std::uint64_t seed, std::uint64_t stream) const {
  CubatureFamily f = *this;
  f.seed_ = seed;
  f.stream_ = stream;
  f.cache_ = std::make_shared<Cache>();
  return f;
}

double CubatureFamily::nominal_size(int level) const {
  switch (kind_) {
    case Kind::smolyak: {
      double binom = 1.0;  // C(l+d-1, d-1), the number of level multi-indices
      for (int j = 1; j < dim_; ++j) binom = binom * (level + j) / j;
      return std::ldexp(1.0, level) * binom;
    }
    case Kind::product: return std::ldexp(1.0, dim_ * level);
    default: return std::ldexp(1.0, level);
  }
}

Eigen::Index CubatureFamily::size(int level) const {
  check_level(level);
  switch (kind_) {
    case Kind::mc:
    case Kind::sobol:
    case Kind::halton:
    case Kind::optimal_weights: return Eigen::Index(1) << level;
    case Kind::product: {
      const double n = std::pow(double(RuleFamily1D::size_at_level(level)), dim_);
      if (n > 1e15) throw std::overflow_error("product family: size overflow");
      return static_cast<Eigen::Index>(n);
    }
    case Kind::smolyak:
      if (rule_->nested()) {
        // distinct nodes of the nested grid: sum over |k|_1 <= l of the
        // per-axis counts of nodes new at level k_i (1, 2, 2^{k-1})
        std::vector<double> ways(level + 1, 0.0);
        ways[0] = 1.0;
        for (int j = 0; j < dim_; ++j) {
          std::vector<double> next(level + 1, 0.0);
          for (int s = 0; s <= level; ++s)
            for (int k = 0; s + k <= level; ++k) next[s + k] += ways[s] * (k == 0 ? 1.0 : k == 1 ? 2.0 : std::ldexp(1.0, k - 1));
          ways.swap(next);
        }
        return static_cast<Eigen::Index>(std::accumulate(ways.begin(), ways.end(), 0.0));
      }
      return points(level)->size();
    default: return points(level)->size();
  }
}

PointSet<double> CubatureFamily::generate(int level) const {
  switch (kind_) {
    case Kind::mc: return mc_points(dim_, level, seed_, domain_, stream_);
    case Kind::sobol: return sobol_points(dim_, level, domain_);
    case Kind::halton: return halton_points(dim_, level, domain_);
    case Kind::frolov: return frolov_points(dim_, level);
    case Kind::smolyak: return smolyak_points(*rule_, dim_, level);
    case Kind::product: return product_points(*rule_, dim_, level);
    case Kind::optimal_weights: {
      const auto base = base_ == Kind::mc ? mc_points(dim_, level, seed_, Domain::unit_cube, stream_)
                                          : sobol_points(dim_, level, Domain::unit_cube);
      return stpq::optimal_weights(base.points, r_);
    }
  }
  throw std::logic_error("unknown cubature kind");
}

std::shared_ptr<const PointSet<double>> CubatureFamily::points(int level) const {
  check_level(level);
  std::lock_guard lock(cache_->mutex);
  auto& slot = cache_->sets[level];
  if (!slot) slot = std::make_shared<const PointSet<double>>(generate(level));
  return slot;
}

}  // namespace stpq
