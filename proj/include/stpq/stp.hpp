#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stpq/cubature.hpp"

namespace stpq {

/// Floor applied to inner values before log-type linking functions.
inline constexpr double kClampDelta = 1e-12;

struct ClampCounter {
  long long count = 0;
};

/// max(t, delta), counting the events where the floor was active.
inline double clamp_floor(double t, ClampCounter& counter, double delta = kClampDelta) {
  if (t < delta) {
    ++counter.count;
    return delta;
  }
  return t;
}

/// Error raised when phi or F produces a non-finite value.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, Eigen::VectorXd z, Eigen::VectorXd u)
      : std::runtime_error(what), z_(std::move(z)), u_(std::move(u)) {}
  const Eigen::VectorXd& z() const { return z_; }
  const Eigen::VectorXd& u() const { return u_; }

 private:
  Eigen::VectorXd z_, u_;
};

/// G(theta) = int F(z, theta, int phi(z, u, theta) dmu(u)) dnu(z).
///
/// phi and F may be vector valued. bind(z) returns the inner kernel for a fixed
/// outer node so per-z setup (choices, factorizations) is paid once.
struct NestedIntegrand {
  using Vector = Eigen::VectorXd;
  using ConstRef = Eigen::Ref<const Vector>;
  using InnerKernel = std::function<void(const ConstRef& u, Eigen::Ref<Vector> out)>;
  using Binder = std::function<InnerKernel(const ConstRef& z)>;
  using Link = std::function<void(const ConstRef& z, const ConstRef& t, Eigen::Ref<Vector> out,
                                  ClampCounter& clamps)>;

  std::string name;
  int outer_dim = 1;
  int inner_dim = 1;
  Domain outer_domain = Domain::unit_cube;
  Domain inner_domain = Domain::unit_cube;
  Vector theta;
  int inner_components = 1;
  int value_components = 1;
  double holder_alpha = 1.0;
  std::optional<double> exact_value;
  Binder bind;
  Link link;

  Vector inner(const ConstRef& z, const ConstRef& u) const;
  Vector linking(const ConstRef& z, const ConstRef& t, ClampCounter& clamps) const;
};

/// Reparameterizes Gaussian axes onto (0,1) with u = tan(pi (x - 1/2)) and
/// weight phi_std(u) pi / cos^2(pi (x - 1/2)); nodes on the boundary contribute 0.
NestedIntegrand tangent_transform(const NestedIntegrand& f, bool outer, bool inner);

/// Maps Laguerre axes onto (0,1) through u = -log(1 - x).
NestedIntegrand exponential_transform(const NestedIntegrand& f, bool outer, bool inner);

/// Rewrites f so its domains match the given families (tangent or exponential
/// maps onto the unit cube); throws if no map exists.
NestedIntegrand adapt_domains(const NestedIntegrand& f, Domain outer, Domain inner);

// --- balancing --------------------------------------------------------------

struct SigmaPlan {
  double s1 = 0, s2 = 0, alpha = 0;
  double kappa = 0;      ///< s1 / (alpha s2)
  double sigma = 0;      ///< sqrt(kappa)
  double gamma_inf = 0;  ///< alpha s1 s2 / (s1 + alpha s2)
  double gamma_1 = 0;    ///< min(s1, alpha s2)
};

SigmaPlan sigma_plan(double s1, double s2, double alpha);

// --- index sets -------------------------------------------------------------

enum class IndexKind { sg, fg };

std::string to_string(IndexKind kind);

struct IndexSet {
  IndexKind kind = IndexKind::sg;
  double sigma = 1.0;
  double L = 0.0;
  std::vector<std::pair<int, int>> pairs;  ///< sorted by (l1, l2)

  bool contains(int l1, int l2) const;
  int max_l1() const;
  /// Largest l2 with (l1, l2) in the set, 0 if none.
  int max_l2(int l1) const;
};

bool in_index_set(IndexKind kind, double sigma, double L, int l1, int l2);

IndexSet index_set(IndexKind kind, double sigma, double L);

// --- quadrature -------------------------------------------------------------

struct LevelContribution {
  int l1 = 0;
  int l2 = 0;
  Eigen::VectorXd value;
};

struct TensorQuadResult {
  Eigen::VectorXd value;
  long long total_inner_evals = 0;  ///< (outer node, inner level) pairs
  long long total_outer_nodes = 0;
  long long total_work = 0;         ///< phi evaluations
  long long clamp_count = 0;
  std::vector<LevelContribution> per_level;

  /// value(0) for scalar integrands, Euclidean norm otherwise.
  double scalar() const { return value.size() == 1 ? value(0) : value.norm(); }
};

struct QuadOptions {
  int threads = 1;
};

/// Q^2_{l2}(phi, z).
Eigen::VectorXd inner_eval(const NestedIntegrand& f, const CubatureFamily& inner,
                           const Eigen::Ref<const Eigen::VectorXd>& z, int l2);

/// F(z, Q^2_{l2}) - F(z, Q^2_{l2-1}), with F(z, Q^2_0) := 0.
Eigen::VectorXd delta2(const NestedIntegrand& f, const CubatureFamily& inner,
                       const Eigen::Ref<const Eigen::VectorXd>& z, int l2, ClampCounter& clamps);

/// Collapsed evaluation over a downward-closed index set.
TensorQuadResult index_set_quadrature(const NestedIntegrand& f, const CubatureFamily& outer,
                                      const CubatureFamily& inner, const IndexSet& set,
                                      const QuadOptions& options = {});

/// Q^1_{floor(L/sigma)}(F(., Q^2_{floor(sigma L)})).
TensorQuadResult ftp_quadrature(const NestedIntegrand& f, const CubatureFamily& outer,
                                const CubatureFamily& inner, double sigma, double L,
                                std::uint64_t seed = 0, const QuadOptions& options = {});

/// Sparse tensor product over the sg index set, collapsed per outer level.
TensorQuadResult stp_quadrature(const NestedIntegrand& f, const CubatureFamily& outer,
                                const CubatureFamily& inner, double sigma, double L,
                                std::uint64_t seed = 0, const QuadOptions& options = {});

/// Literal double sum of Delta^1_{l1} Delta^2_{l2} over the set (reference path).
TensorQuadResult literal_quadrature(const NestedIntegrand& f, const CubatureFamily& outer,
                                    const CubatureFamily& inner, const IndexSet& set);

/// Number of phi evaluations the collapsed evaluation performs.
long long node_count(IndexKind kind, double sigma, double L, const CubatureFamily& outer,
                     const CubatureFamily& inner);

/// Families re-seeded for one run: outer uses stream 0, inner stream 1.
std::pair<CubatureFamily, CubatureFamily> seeded_families(const CubatureFamily& outer,
                                                          const CubatureFamily& inner,
                                                          std::uint64_t seed);

}  // namespace stpq
