#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stpq/normal.hpp"
#include "stpq/stp.hpp"

namespace stpq {

/// Sigma_ii = 1, Sigma_ij = rho; C is the upper factor with Sigma = C^T C.
struct EquiCorrMatrix {
  int J = 0;
  double rho = 0.0;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd C;

  static EquiCorrMatrix make(int J, double rho);
};

/// exp(v_i - max v) / sum_j exp(v_j - max v).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar vmax = v.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (v.array() - vmax).exp().matrix();
  return e / e.sum();
}

/// Logit choice probability of alternative i for utilities z u.
template <typename DerivedZ, typename DerivedU>
typename DerivedZ::Scalar logit_kernel(const Eigen::MatrixBase<DerivedZ>& z, const Eigen::MatrixBase<DerivedU>& u,
                                       Eigen::Index i) {
  return softmax(z * u)(i);
}

/// Product of the sequential-conditioning factors of the Genz transform.
///
/// L is the lower Cholesky factor of the differenced covariance (m x m), w the
/// utility differences (m), u a point of (0,1)^{m-1}.
template <typename DerivedL, typename DerivedW, typename DerivedU>
typename DerivedL::Scalar genz_factors(const Eigen::MatrixBase<DerivedL>& L, const Eigen::MatrixBase<DerivedW>& w,
                                       const Eigen::MatrixBase<DerivedU>& u) {
  using Scalar = typename DerivedL::Scalar;
  constexpr Scalar eps = Scalar(1e-15);
  const Eigen::Index m = L.rows();
  Scalar y[64];
  if (m > 64) throw std::invalid_argument("genz_factors: dimension above 64");
  Scalar prod(1);
  for (Eigen::Index i = 0; i < m; ++i) {
    Scalar s = w(i);
    for (Eigen::Index j = 0; j < i; ++j) s -= L(i, j) * y[j];
    const Scalar what = normal_cdf(s / L(i, i));
    prod *= what;
    if (i + 1 < m) {
      y[i] = normal_icdf(std::clamp(u(i) * what, eps, Scalar(1) - eps));
    }
  }
  return prod;
}

// --- synthetic ------------------------------------------------------------------

/// -log Gamma(theta) - theta + (theta-1) log theta + log Gamma(theta+1) + log(2 pi)/2.
double synthetic_exact(double theta);

/// phi(z,u) = u^{z+theta-1} on the Laguerre half-line, F = log, z uniform on [0,1].
NestedIntegrand synthetic_integrand(double theta = 4.0);

// --- mixed logit ----------------------------------------------------------------

struct MixedLogitSpec {
  int J = 3;
  int q = 4;
  Eigen::VectorXd u0;
  Eigen::MatrixXd sigma;
  std::uint64_t data_seed = 0;

  /// J = 3, q = 4, u0 = 0, Sigma = Sigma_{0.1}.
  static MixedLogitSpec standard();
  void validate() const;
  int outer_dim() const { return J * q; }
  int inner_dim() const { return q; }
};

/// Simulated choice at outer node z: argmax of z u* + Gumbel noise with
/// u* drawn from the mixing law, seeded from the bits of z.
int simulate_logit_choice(const MixedLogitSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& z);

/// Inner integrand: logit probability of alternative i (or of the simulated
/// choice when i < 0), u = u0 + C g with g standard normal. F = log with clamp.
NestedIntegrand mixed_logit_integrand(const MixedLogitSpec& spec, int i = -1);

/// sum_j y_j log P_j.
double ml_objective_term(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& P,
                         ClampCounter& clamps);

// --- multinomial probit -----------------------------------------------------------

struct ProbitSpec {
  int J = 5;
  int q = 3;
  Eigen::VectorXd theta;
  Eigen::MatrixXd sigma;
  std::uint64_t data_seed = 0;
  double fd_step = 1e-4;

  /// J = 5, q = 3, theta = (1,1,1), Sigma = Sigma_{0.1}.
  static ProbitSpec standard();
  void validate() const;
  int outer_dim() const { return J * q; }
  int inner_dim() const { return J - 2; }

  /// Lower Cholesky factor of the covariance of (eps_i - eps_k)_{i != k}.
  Eigen::MatrixXd differenced_cholesky(int k) const;
};

/// (v_k - v_i)_{i != k}.
Eigen::VectorXd utility_differences(const Eigen::Ref<const Eigen::VectorXd>& v, int k);

/// Simulated choice argmax(z theta + C^T G) with G seeded from the bits of z.
int simulate_probit_choice(const ProbitSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& z);

/// Probability of alternative k (simulated choice if k < 0); F(t) = t.
NestedIntegrand mnp_choice_integrand(const ProbitSpec& spec, int k = -1);

/// q-vector GMM moment grad P_k / P_k with central differences sharing the
/// inner nodes; inner components are P(theta), P(theta + h e_j), P(theta - h e_j).
NestedIntegrand mnp_gmm_integrand(const ProbitSpec& spec);

/// Moment m = sum_j (y_j / P_j - 1) grad P_j from given probabilities and gradients.
Eigen::VectorXd gmm_moment(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& P,
                           const Eigen::Ref<const Eigen::MatrixXd>& gradP);

// --- mixed probit -----------------------------------------------------------------

struct MixedProbitSpec {
  int J = 5;
  int q = 4;
  Eigen::MatrixXd z;  ///< J x q fixed covariates
  Eigen::MatrixXd sigma;
  Eigen::VectorXd theta0;
  Eigen::MatrixXd xi;

  /// J = 5, q = 4, Sigma_{0.2}, theta0 = 0.2, Xi = Sigma_{0.1}, z uniform with seed 0.
  static MixedProbitSpec standard();
  void validate() const;
  int outer_dim() const { return q; }
  int inner_dim() const { return J - 2; }
};

/// Outer Gaussian g with theta = theta0 + C_Xi g; inner Genz probability of
/// alternative i at the fixed covariates; F(t) = t.
NestedIntegrand mixed_probit_integrand(const MixedProbitSpec& spec, int i = 0);

/// J x q matrix of i.i.d. uniforms from a seed.
Eigen::MatrixXd uniform_covariates(int J, int q, std::uint64_t seed);

}  // namespace stpq
