#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "stpq/rules1d.hpp"

namespace stpq {

/// Integration domain of a cubature family.
enum class Domain {
  unit_cube,  ///< [0,1]^d, Lebesgue
  gaussian,   ///< R^d, standard normal
  laguerre,   ///< [0,inf)^d, exp(-sum x)
};

std::string to_string(Domain domain);

/// Weighted point set, one point per column.
template <typename Scalar = double>
struct PointSet {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix points;  ///< d x N
  Vector weights;

  Eigen::Index dim() const { return points.rows(); }
  Eigen::Index size() const { return points.cols(); }

  template <typename F>
  Scalar integrate(F&& f) const {
    Scalar acc(0);
    for (Eigen::Index i = 0; i < size(); ++i) acc += weights(i) * f(points.col(i));
    return acc;
  }
};

/// Declared error-bound parameters: error <= C N^{-s} log(N)^t; size N ~ 2^l l^q.
struct Rates {
  double s = 0.0;
  double t = 0.0;
  int q = 0;
};

// --- point generators -------------------------------------------------------

/// 2^level i.i.d. draws; `stream` separates independent axes sharing a seed.
/// Level l is a prefix of level l+1.
PointSet<double> mc_points(int d, int level, std::uint64_t seed, Domain domain = Domain::unit_cube,
                           std::uint64_t stream = 0);

/// Sobol points with indices 1..2^level (Gray-code order).
PointSet<double> sobol_points(int d, int level, Domain domain = Domain::unit_cube);

/// Halton points with indices 1..2^level.
PointSet<double> halton_points(int d, int level, Domain domain = Domain::unit_cube);

inline constexpr int kMaxSobolDim = 32;
inline constexpr int kMaxHaltonDim = 32;

/// Radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, unsigned base);

/// Roots of prod_{j=1..d}(x - (2j-1)) - 1, ascending.
Eigen::VectorXd frolov_roots(int d);

/// Unimodular-equivalent, LLL-reduced Frolov generator with |det| = 1.
Eigen::MatrixXd frolov_generator(int d);

/// Frolov lattice points strictly inside (0,1)^d at density ~2^level.
PointSet<double> frolov_points(int d, int level);

/// Smolyak combination over the zero-based simplex |k|_1 <= level.
PointSet<double> smolyak_points(const RuleFamily1D& rule, int d, int level);

/// Full tensor grid of rule(level) in every axis.
PointSet<double> product_points(const RuleFamily1D& rule, int d, int level);

/// Generic combination technique over a downward-closed set of zero-based
/// multi-indices (one per column).
PointSet<double> combination_points(const RuleFamily1D& rule,
                                    const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& index_set);

/// Domain a RuleFamily1D maps to once converted to a probability measure.
Domain rule_domain(const RuleFamily1D& rule);

/// Reproducing kernel of the tensor H^r_mix space on [0,1]^d.
double ow_kernel(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                 int r);

/// Closed-form integral of ow_kernel(x, .) over [0,1]^d.
double ow_kernel_mean(const Eigen::Ref<const Eigen::VectorXd>& x, int r);

/// Optimal weights for `points` (d x N, inside [0,1]^d) solving K w = b.
PointSet<double> optimal_weights(const Eigen::MatrixXd& points, int r);

/// One point per line: coordinates then weight, %.17g.
void write_point_set(std::ostream& os, const PointSet<double>& ps);

// --- leveled families -------------------------------------------------------

/// A leveled d-dimensional cubature family with cached point sets.
class CubatureFamily {
 public:
  enum class Kind { mc, sobol, halton, frolov, smolyak, product, optimal_weights };

  static CubatureFamily mc(int d, Domain domain = Domain::unit_cube);
  static CubatureFamily sobol(int d, Domain domain = Domain::unit_cube);
  static CubatureFamily halton(int d, Domain domain = Domain::unit_cube);
  static CubatureFamily frolov(int d, int r = 2);
  static CubatureFamily smolyak(const RuleFamily1D& rule, int d, int r = 2);
  static CubatureFamily product(const RuleFamily1D& rule, int d, int r = 2);
  /// `base` is mc or sobol; nodes are the base family's points.
  static CubatureFamily optimal_weights(Kind base, int d, int r = 1);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  Domain domain() const { return domain_; }
  const Rates& rates() const { return rates_; }
  bool randomized() const;
  /// Point set of level l is a prefix of level l+1.
  bool nested() const;
  std::string name() const;

  /// Copy with a new random stream and an empty cache.
  CubatureFamily with_seed(std::uint64_t seed, std::uint64_t stream = 0) const;
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Point set at `level` (>= 1); cached, safe to call concurrently.
  std::shared_ptr<const PointSet<double>> points(int level) const;
  /// |points(level)|, without generating when the count has a closed form.
  Eigen::Index size(int level) const;

  /// Declared schedule N(l): 2^l, 2^l C(l+d-1, d-1) (order 2^l l^{d-1}) or 2^{dl}.
  double nominal_size(int level) const;

 private:
  CubatureFamily(Kind kind, int d, Domain domain);
  PointSet<double> generate(int level) const;

  struct Cache {
    std::mutex mutex;
    std::map<int, std::shared_ptr<const PointSet<double>>> sets;
  };

  Kind kind_;
  Kind base_ = Kind::mc;
  int dim_;
  Domain domain_;
  Rates rates_;
  int r_ = 2;
  std::shared_ptr<RuleFamily1D> rule_;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::shared_ptr<Cache> cache_;
};

std::string to_string(CubatureFamily::Kind kind);

}  // namespace stpq
