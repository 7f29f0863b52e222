#include "stpq/stp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "stpq/normal.hpp"
#include "stpq/parallel.hpp"

namespace stpq {

namespace {

constexpr double kLevelEps = 1e-9;

std::string format_vector(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << ')';
  return os.str();
}

void require_finite(const Eigen::Ref<const Eigen::VectorXd>& out, const char* what,
                    const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (!out.allFinite())
    throw NonFiniteError(std::string(what) + " is not finite at z=" + format_vector(z) +
                             ", u=" + format_vector(u),
                         z, u);
}

}  // namespace

NestedIntegrand::Vector NestedIntegrand::inner(const ConstRef& z, const ConstRef& u) const {
  Vector out(inner_components);
  bind(z)(u, out);
  return out;
}

NestedIntegrand::Vector NestedIntegrand::linking(const ConstRef& z, const ConstRef& t,
                                                 ClampCounter& clamps) const {
  Vector out(value_components);
  link(z, t, out, clamps);
  return out;
}

// --- domain maps ---------------------------------------------------------------

namespace {

using Vector = Eigen::VectorXd;
using ConstRef = NestedIntegrand::ConstRef;
using MapFn = double (*)(const ConstRef& x, Vector& u);

double tangent_map(const ConstRef& x, Vector& u) {
  u.resize(x.size());
  double w = 1.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x(j) > 0.0 && x(j) < 1.0)) return 0.0;
    const double a = std::numbers::pi * (x(j) - 0.5);
    const double c = std::cos(a);
    u(j) = std::tan(a);
    w *= normal_pdf(u(j)) * std::numbers::pi / (c * c);
  }
  return w;
}

double exponential_map(const ConstRef& x, Vector& u) {
  u.resize(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x(j) >= 0.0 && x(j) < 1.0)) return 0.0;
    u(j) = -std::log1p(-x(j));
  }
  return 1.0;
}

NestedIntegrand remap(const NestedIntegrand& f, MapFn map, bool outer, bool inner) {
  NestedIntegrand g = f;
  if (outer) g.outer_domain = Domain::unit_cube;
  if (inner) g.inner_domain = Domain::unit_cube;
  const auto bind = f.bind;
  const auto link = f.link;
  g.bind = [bind, map, outer, inner](const ConstRef& x) -> NestedIntegrand::InnerKernel {
    NestedIntegrand::InnerKernel kernel;
    if (outer) {
      Vector z;
      if (map(x, z) == 0.0)
        return [](const ConstRef&, Eigen::Ref<Vector> out) { out.setZero(); };
      kernel = bind(z);
    } else {
      kernel = bind(x);
    }
    if (!inner) return kernel;
    return [kernel, map](const ConstRef& y, Eigen::Ref<Vector> out) {
      thread_local Vector u;
      const double w = map(y, u);
      if (w == 0.0) {
        out.setZero();
        return;
      }
      kernel(u, out);
      out *= w;
    };
  };
  if (outer) {
    g.link = [link, map](const ConstRef& x, const ConstRef& t, Eigen::Ref<Vector> out, ClampCounter& c) {
      Vector z;
      const double w = map(x, z);
      if (w == 0.0) {
        out.setZero();
        return;
      }
      link(z, t, out, c);
      out *= w;
    };
  }
  return g;
}

void require_domain(const NestedIntegrand& f, bool outer, bool inner, Domain d, const char* what) {
  if ((outer && f.outer_domain != d) || (inner && f.inner_domain != d))
    throw std::invalid_argument(std::string(what) + ": axis domain is not " + to_string(d));
}

}  // namespace

NestedIntegrand tangent_transform(const NestedIntegrand& f, bool outer, bool inner) {
  require_domain(f, outer, inner, Domain::gaussian, "tangent_transform");
  return remap(f, tangent_map, outer, inner);
}

NestedIntegrand exponential_transform(const NestedIntegrand& f, bool outer, bool inner) {
  require_domain(f, outer, inner, Domain::laguerre, "exponential_transform");
  return remap(f, exponential_map, outer, inner);
}

NestedIntegrand adapt_domains(const NestedIntegrand& f, Domain outer, Domain inner) {
  NestedIntegrand g = f;
  for (int axis = 0; axis < 2; ++axis) {
    const Domain have = axis == 0 ? outer : inner;
    const Domain want = axis == 0 ? g.outer_domain : g.inner_domain;
    if (have == want) continue;
    if (have != Domain::unit_cube)
      throw std::invalid_argument("a " + to_string(have) + " family cannot integrate over the " +
                                  to_string(want) + " " + (axis == 0 ? "outer" : "inner") + " domain");
    if (want == Domain::gaussian) g = tangent_transform(g, axis == 0, axis == 1);
    else g = exponential_transform(g, axis == 0, axis == 1);
  }
  return g;
}

// --- balancing and index sets --------------------------------------------------

SigmaPlan sigma_plan(double s1, double s2, double alpha) {
  if (!(s1 > 0.0 && s2 > 0.0 && alpha > 0.0 && std::isfinite(s1) && std::isfinite(s2) &&
        std::isfinite(alpha)))
    throw std::invalid_argument("sigma_plan: s1, s2 and alpha must be positive and finite");
  SigmaPlan p;
  p.s1 = s1;
  p.s2 = s2;
  p.alpha = alpha;
  p.kappa = s1 / (alpha * s2);
  p.sigma = std::sqrt(p.kappa);
  p.gamma_inf = alpha * s1 * s2 / (s1 + alpha * s2);
  p.gamma_1 = std::min(s1, alpha * s2);
  return p;
}

std::string to_string(IndexKind kind) { return kind == IndexKind::sg ? "sg" : "fg"; }

bool in_index_set(IndexKind kind, double sigma, double L, int l1, int l2) {
  if (l1 < 1 || l2 < 1) return false;
  const double a = sigma * l1, b = l2 / sigma;
  const double lhs = kind == IndexKind::sg ? a + b : std::max(a, b);
  return lhs <= L + kLevelEps * std::max(1.0, std::abs(L));
}

bool IndexSet::contains(int l1, int l2) const {
  return std::binary_search(pairs.begin(), pairs.end(), std::pair{l1, l2});
}

int IndexSet::max_l1() const { return pairs.empty() ? 0 : pairs.back().first; }

int IndexSet::max_l2(int l1) const {
  int best = 0;
  for (const auto& [a, b] : pairs)
    if (a == l1) best = std::max(best, b);
  return best;
}

IndexSet index_set(IndexKind kind, double sigma, double L) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(L))
    throw std::invalid_argument("index_set: sigma must be positive and L finite");
  IndexSet set;
  set.kind = kind;
  set.sigma = sigma;
  set.L = L;
  for (int l1 = 1; in_index_set(kind, sigma, L, l1, 1); ++l1)
    for (int l2 = 1; in_index_set(kind, sigma, L, l1, l2); ++l2) set.pairs.emplace_back(l1, l2);
  if (set.pairs.empty())
    throw std::invalid_argument("index_set: empty for sigma=" + std::to_string(sigma) + ", L=" +
                                std::to_string(L) + " (need L >= sigma + 1/sigma)");
  return set;
}

// --- inner rules ---------------------------------------------------------------

Eigen::VectorXd inner_eval(const NestedIntegrand& f, const CubatureFamily& inner,
                           const Eigen::Ref<const Eigen::VectorXd>& z, int l2) {
  const auto ps = inner.points(l2);
  const auto kernel = f.bind(z);
  Vector acc = Vector::Zero(f.inner_components), out(f.inner_components);
  for (Eigen::Index j = 0; j < ps->size(); ++j) {
    kernel(ps->points.col(j), out);
    require_finite(out, "inner integrand", z, ps->points.col(j));
    acc += ps->weights(j) * out;
  }
  return acc;
}

Eigen::VectorXd delta2(const NestedIntegrand& f, const CubatureFamily& inner,
                       const Eigen::Ref<const Eigen::VectorXd>& z, int l2, ClampCounter& clamps) {
  if (l2 < 1) throw std::invalid_argument("delta2: l2 must be >= 1");
  Vector d = f.linking(z, inner_eval(f, inner, z, l2), clamps);
  if (l2 >= 2) d -= f.linking(z, inner_eval(f, inner, z, l2 - 1), clamps);
  return d;
}

// --- collapsed evaluation ------------------------------------------------------

namespace {

// contribution = Q1_{l1}(g_m) - [subtract] Q1_{l1-1}(g_m), g_m = F(., Q2_m)
struct Term {
  int l1;
  int m;
  bool subtract;
};

// Outer nodes sharing one list of required inner levels.
struct Block {
  int level;            // outer point set the nodes are taken from
  Eigen::Index begin;   // node index range [begin, end)
  Eigen::Index end;
  std::vector<int> ms;  // ascending inner levels
};

std::vector<Term> collapsed_terms(const IndexSet& set) {
  std::vector<Term> terms;
  for (int l1 = 1; l1 <= set.max_l1(); ++l1) {
    const int m = set.max_l2(l1);
    if (m >= 1) terms.push_back({l1, m, l1 > 1});
  }
  return terms;
}

std::vector<Block> plan_blocks(const std::vector<Term>& terms, const CubatureFamily& outer) {
  std::vector<Block> blocks;
  if (outer.nested()) {
    int top = 0;
    for (const auto& t : terms) top = std::max(top, t.l1);
    Eigen::Index prev = 0;
    for (int l = 1; l <= top; ++l) {
      const Eigen::Index n = outer.size(l);
      if (n <= prev) continue;
      Block b{top, prev, n, {}};
      for (const auto& t : terms)
        if (t.l1 >= l) b.ms.push_back(t.m);
      std::sort(b.ms.begin(), b.ms.end());
      b.ms.erase(std::unique(b.ms.begin(), b.ms.end()), b.ms.end());
      if (!b.ms.empty()) blocks.push_back(std::move(b));
      prev = n;
    }
  } else {
    std::map<int, std::vector<int>> need;
    for (const auto& t : terms) {
      need[t.l1].push_back(t.m);
      if (t.subtract) need[t.l1 - 1].push_back(t.m);
    }
    for (auto& [level, ms] : need) {
      std::sort(ms.begin(), ms.end());
      ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
      blocks.push_back({level, 0, outer.size(level), ms});
    }
  }
  return blocks;
}

long long inner_work(const std::vector<int>& ms, const CubatureFamily& inner) {
  if (inner.nested()) return inner.size(ms.back());
  long long w = 0;
  for (int m : ms) w += inner.size(m);
  return w;
}

struct SlotResult {
  Eigen::MatrixXd F;  // value_components x |ms|
  long long work = 0;
  long long clamps = 0;
};

SlotResult eval_slot(const NestedIntegrand& f, const CubatureFamily& inner, const std::vector<int>& ms,
                     const Eigen::Ref<const Eigen::VectorXd>& z) {
  SlotResult r;
  const auto kernel = f.bind(z);
  const int nc = f.inner_components;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(nc, Eigen::Index(ms.size()));
  Vector out(nc);
  if (inner.nested()) {
    std::vector<std::shared_ptr<const PointSet<double>>> sets;
    for (int m : ms) sets.push_back(inner.points(m));
    const auto& top = *sets.back();
    for (Eigen::Index j = 0; j < top.size(); ++j) {
      kernel(top.points.col(j), out);
      require_finite(out, "inner integrand", z, top.points.col(j));
      for (std::size_t k = 0; k < ms.size(); ++k)
        if (j < sets[k]->size()) t.col(Eigen::Index(k)) += sets[k]->weights(j) * out;
    }
    r.work = top.size();
  } else {
    for (std::size_t k = 0; k < ms.size(); ++k) {
      const auto ps = inner.points(ms[k]);
      for (Eigen::Index j = 0; j < ps->size(); ++j) {
        kernel(ps->points.col(j), out);
        require_finite(out, "inner integrand", z, ps->points.col(j));
        t.col(Eigen::Index(k)) += ps->weights(j) * out;
      }
      r.work += ps->size();
    }
  }
  ClampCounter clamps;
  r.F.resize(f.value_components, Eigen::Index(ms.size()));
  for (std::size_t k = 0; k < ms.size(); ++k) {
    Vector v(f.value_components);
    f.link(z, t.col(Eigen::Index(k)), v, clamps);
    require_finite(v, "linking function", z, t.col(Eigen::Index(k)));
    r.F.col(Eigen::Index(k)) = v;
  }
  r.clamps = clamps.count;
  return r;
}

TensorQuadResult run_terms(const NestedIntegrand& f, const CubatureFamily& outer,
                           const CubatureFamily& inner, const std::vector<Term>& terms,
                           const QuadOptions& options) {
  if (outer.dim() != f.outer_dim || inner.dim() != f.inner_dim)
    throw std::invalid_argument("family dimensions do not match the integrand (" +
                                std::to_string(outer.dim()) + "," + std::to_string(inner.dim()) +
                                ") vs (" + std::to_string(f.outer_dim) + "," +
                                std::to_string(f.inner_dim) + ")");
  if (outer.domain() != f.outer_domain || inner.domain() != f.inner_domain)
    throw std::invalid_argument("family domains do not match the integrand; use adapt_domains");
  const auto blocks = plan_blocks(terms, outer);

  struct Slot {
    std::size_t block;
    Eigen::Index index;
  };
  std::vector<Slot> slots;
  std::map<int, std::shared_ptr<const PointSet<double>>> outer_sets;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    outer_sets.emplace(blocks[b].level, outer.points(blocks[b].level));
    for (Eigen::Index i = blocks[b].begin; i < blocks[b].end; ++i) slots.push_back({b, i});
  }
  for (const auto& t : terms) {
    outer_sets.emplace(t.l1, outer.points(t.l1));
    if (t.subtract) outer_sets.emplace(t.l1 - 1, outer.points(t.l1 - 1));
  }

  std::vector<SlotResult> results(slots.size());
  parallel_for(slots.size(), options.threads, [&](std::size_t s) {
    const auto& blk = blocks[slots[s].block];
    results[s] = eval_slot(f, inner, blk.ms, outer_sets.at(blk.level)->points.col(slots[s].index));
  });

  TensorQuadResult res;
  res.value = Vector::Zero(f.value_components);
  res.total_outer_nodes = static_cast<long long>(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    res.total_work += results[s].work;
    res.clamp_count += results[s].clamps;
    res.total_inner_evals += static_cast<long long>(blocks[slots[s].block].ms.size());
  }

  // slot offsets per block so lookups in the fixed-order reduction stay cheap
  std::vector<std::size_t> offset(blocks.size() + 1, 0);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    offset[b + 1] = offset[b] + std::size_t(blocks[b].end - blocks[b].begin);

  auto quad = [&](int level, int m) {
    const auto& ps = *outer_sets.at(level);
    Vector acc = Vector::Zero(f.value_components);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& blk = blocks[b];
      if (!outer.nested() && blk.level != level) continue;
      const auto k = std::find(blk.ms.begin(), blk.ms.end(), m) - blk.ms.begin();
      const Eigen::Index stop = std::min(blk.end, ps.size());
      for (Eigen::Index i = blk.begin; i < stop; ++i)
        acc += ps.weights(i) * results[offset[b] + std::size_t(i - blk.begin)].F.col(k);
    }
    return acc;
  };

  for (const auto& t : terms) {
    Vector c = quad(t.l1, t.m);
    if (t.subtract) c -= quad(t.l1 - 1, t.m);
    if (!c.allFinite())
      throw std::runtime_error("non-finite contribution at (l1, l2) = (" + std::to_string(t.l1) + ", " +
                               std::to_string(t.m) + ")");
    res.per_level.push_back({t.l1, t.m, c});
    res.value += c;
  }
  return res;
}

int floor_level(double x) { return static_cast<int>(std::floor(x + kLevelEps * std::max(1.0, std::abs(x)))); }

std::vector<Term> ftp_terms(double sigma, double L) {
  if (!(sigma > 0.0)) throw std::invalid_argument("ftp: sigma must be positive");
  const int l1 = floor_level(L / sigma), l2 = floor_level(sigma * L);
  if (l1 < 1 || l2 < 1)
    throw std::invalid_argument("ftp: floor(L/sigma) and floor(sigma L) must be >= 1 (sigma=" +
                                std::to_string(sigma) + ", L=" + std::to_string(L) + ")");
  return {{l1, l2, false}};
}

}  // namespace

std::pair<CubatureFamily, CubatureFamily> seeded_families(const CubatureFamily& outer,
                                                          const CubatureFamily& inner,
                                                          std::uint64_t seed) {
  return {outer.randomized() ? outer.with_seed(seed, 0) : outer,
          inner.randomized() ? inner.with_seed(seed, 1) : inner};
}

TensorQuadResult index_set_quadrature(const NestedIntegrand& f, const CubatureFamily& outer,
                                      const CubatureFamily& inner, const IndexSet& set,
                                      const QuadOptions& options) {
  return run_terms(f, outer, inner, collapsed_terms(set), options);
}

TensorQuadResult ftp_quadrature(const NestedIntegrand& f, const CubatureFamily& outer,
                                const CubatureFamily& inner, double sigma, double L,
                                std::uint64_t seed, const QuadOptions& options) {
  const auto [o, i] = seeded_families(outer, inner, seed);
  return run_terms(f, o, i, ftp_terms(sigma, L), options);
}

TensorQuadResult stp_quadrature(const NestedIntegrand& f, const CubatureFamily& outer,
                                const CubatureFamily& inner, double sigma, double L,
                                std::uint64_t seed, const QuadOptions& options) {
  const auto [o, i] = seeded_families(outer, inner, seed);
  return run_terms(f, o, i, collapsed_terms(index_set(IndexKind::sg, sigma, L)), options);
}

TensorQuadResult literal_quadrature(const NestedIntegrand& f, const CubatureFamily& outer,
                                    const CubatureFamily& inner, const IndexSet& set) {
  TensorQuadResult res;
  res.value = Vector::Zero(f.value_components);
  ClampCounter clamps;
  for (const auto& [l1, l2] : set.pairs) {
    Vector c = Vector::Zero(f.value_components);
    for (int side = 0; side < (l1 > 1 ? 2 : 1); ++side) {
      const auto ps = outer.points(l1 - side);
      for (Eigen::Index i = 0; i < ps->size(); ++i) {
        const Vector d = delta2(f, inner, ps->points.col(i), l2, clamps);
        c += (side == 0 ? 1.0 : -1.0) * ps->weights(i) * d;
        res.total_work += inner.size(l2) + (l2 > 1 ? inner.size(l2 - 1) : 0);
      }
    }
    res.per_level.push_back({l1, l2, c});
    res.value += c;
  }
  res.clamp_count = clamps.count;
  return res;
}

long long node_count(IndexKind kind, double sigma, double L, const CubatureFamily& outer,
                     const CubatureFamily& inner) {
  const auto terms = kind == IndexKind::fg ? ftp_terms(sigma, L)
                                           : collapsed_terms(index_set(IndexKind::sg, sigma, L));
  long long total = 0;
  for (const auto& b : plan_blocks(terms, outer))
    total += static_cast<long long>(b.end - b.begin) * inner_work(b.ms, inner);
  return total;
}

}  // namespace stpq
