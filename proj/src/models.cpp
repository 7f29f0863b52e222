#include "stpq/models.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace stpq {

namespace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ConstRef = NestedIntegrand::ConstRef;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double unit_draw(std::mt19937_64& engine) { return (double(engine() >> 11) + 0.5) * 0x1p-53; }

// Engine seeded from the exact bit pattern of an outer node.
std::mt19937_64 node_engine(const ConstRef& z, std::uint64_t data_seed, std::uint32_t tag) {
  std::vector<std::uint32_t> words{tag, std::uint32_t(data_seed), std::uint32_t(data_seed >> 32)};
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const auto bits = std::bit_cast<std::uint64_t>(z(j));
    words.push_back(std::uint32_t(bits));
    words.push_back(std::uint32_t(bits >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

Matrix covariates(const ConstRef& z, int J, int q) {
  return Eigen::Map<const RowMajor>(z.data(), J, q);
}

Matrix lower_cholesky(const Matrix& S, const char* what) {
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) throw std::invalid_argument(std::string(what) + " is not positive definite");
  return llt.matrixL();
}

void check_square(const Matrix& S, int n, const char* what) {
  if (S.rows() != n || S.cols() != n)
    throw std::invalid_argument(std::string(what) + " must be " + std::to_string(n) + "x" + std::to_string(n));
  if (!S.isApprox(S.transpose(), 1e-12)) throw std::invalid_argument(std::string(what) + " must be symmetric");
}

}  // namespace

EquiCorrMatrix EquiCorrMatrix::make(int J, double rho) {
  if (J < 1) throw std::invalid_argument("EquiCorrMatrix: J must be >= 1");
  if (J > 1 && !(rho > -1.0 / (J - 1) && rho < 1.0))
    throw std::invalid_argument("EquiCorrMatrix: rho must lie in (-1/(J-1), 1)");
  EquiCorrMatrix m;
  m.J = J;
  m.rho = rho;
  m.sigma = Matrix::Constant(J, J, rho);
  m.sigma.diagonal().setOnes();
  Eigen::LLT<Matrix> llt(m.sigma);
  m.C = llt.matrixU();
  return m;
}

// --- synthetic ------------------------------------------------------------------

double synthetic_exact(double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("synthetic: theta must be positive");
  return -std::lgamma(theta) - theta + (theta - 1.0) * std::log(theta) + std::lgamma(theta + 1.0) +
         0.5 * std::log(2.0 * std::numbers::pi);
}

NestedIntegrand synthetic_integrand(double theta) {
  NestedIntegrand f;
  f.name = "synthetic";
  f.outer_dim = 1;
  f.inner_dim = 1;
  f.outer_domain = Domain::unit_cube;
  f.inner_domain = Domain::laguerre;
  f.theta = Vector::Constant(1, theta);
  f.exact_value = synthetic_exact(theta);
  f.bind = [theta](const ConstRef& z) -> NestedIntegrand::InnerKernel {
    const double p = z(0) + theta - 1.0;
    return [p](const ConstRef& u, Eigen::Ref<Vector> out) { out(0) = std::pow(u(0), p); };
  };
  f.link = [](const ConstRef&, const ConstRef& t, Eigen::Ref<Vector> out, ClampCounter& c) {
    out(0) = std::log(clamp_floor(t(0), c));
  };
  return f;
}

// --- mixed logit ----------------------------------------------------------------

MixedLogitSpec MixedLogitSpec::standard() {
  MixedLogitSpec s;
  s.J = 3;
  s.q = 4;
  s.u0 = Vector::Zero(4);
  s.sigma = EquiCorrMatrix::make(4, 0.1).sigma;
  return s;
}

void MixedLogitSpec::validate() const {
  if (J < 2 || q < 1) throw std::invalid_argument("MixedLogitSpec: need J >= 2 and q >= 1");
  if (u0.size() != q) throw std::invalid_argument("MixedLogitSpec: u0 must have q entries");
  check_square(sigma, q, "MixedLogitSpec: Sigma");
  lower_cholesky(sigma, "MixedLogitSpec: Sigma");
}

int simulate_logit_choice(const MixedLogitSpec& spec, const ConstRef& z) {
  auto engine = node_engine(z, spec.data_seed, 1);
  const Matrix L = lower_cholesky(spec.sigma, "MixedLogitSpec: Sigma");
  Vector g(spec.q);
  for (int j = 0; j < spec.q; ++j) g(j) = normal_icdf(unit_draw(engine));
  const Vector v = covariates(z, spec.J, spec.q) * (spec.u0 + L * g);
  Eigen::Index best = 0;
  double top = -INFINITY;
  for (int i = 0; i < spec.J; ++i) {
    const double e = v(i) - std::log(-std::log(unit_draw(engine)));
    if (e > top) {
      top = e;
      best = i;
    }
  }
  return static_cast<int>(best);
}

NestedIntegrand mixed_logit_integrand(const MixedLogitSpec& spec, int i) {
  spec.validate();
  if (i >= spec.J) throw std::invalid_argument("mixed_logit: alternative out of range");
  NestedIntegrand f;
  f.name = "mixed_logit";
  f.outer_dim = spec.outer_dim();
  f.inner_dim = spec.inner_dim();
  f.outer_domain = Domain::unit_cube;
  f.inner_domain = Domain::gaussian;
  f.theta = spec.u0;
  const Matrix L = lower_cholesky(spec.sigma, "MixedLogitSpec: Sigma");
  f.bind = [spec, L, i](const ConstRef& z) -> NestedIntegrand::InnerKernel {
    const int k = i >= 0 ? i : simulate_logit_choice(spec, z);
    // utilities z (u0 + L g) = a + B g
    const Matrix Z = covariates(z, spec.J, spec.q);
    const Vector a = Z * spec.u0;
    const Matrix B = Z * L;
    return [a, B, k](const ConstRef& g, Eigen::Ref<Vector> out) {
      out(0) = softmax(a + B * g)(k);
    };
  };
  f.link = [](const ConstRef&, const ConstRef& t, Eigen::Ref<Vector> out, ClampCounter& c) {
    out(0) = std::log(clamp_floor(t(0), c));
  };
  return f;
}

double ml_objective_term(const ConstRef& y, const ConstRef& P, ClampCounter& clamps) {
  if (y.size() != P.size()) throw std::invalid_argument("ml_objective_term: size mismatch");
  double m = 0.0;
  for (Eigen::Index j = 0; j < y.size(); ++j)
    if (y(j) != 0.0) m += y(j) * std::log(clamp_floor(P(j), clamps));
  return m;
}

// --- multinomial probit -----------------------------------------------------------

ProbitSpec ProbitSpec::standard() {
  ProbitSpec s;
  s.J = 5;
  s.q = 3;
  s.theta = Vector::Ones(3);
  s.sigma = EquiCorrMatrix::make(5, 0.1).sigma;
  return s;
}

void ProbitSpec::validate() const {
  if (J < 3 || q < 1) throw std::invalid_argument("ProbitSpec: need J >= 3 and q >= 1");
  if (theta.size() != q) throw std::invalid_argument("ProbitSpec: theta must have q entries");
  if (!(fd_step > 0.0)) throw std::invalid_argument("ProbitSpec: fd_step must be positive");
  check_square(sigma, J, "ProbitSpec: Sigma");
  for (int k = 0; k < J; ++k) differenced_cholesky(k);
}

Matrix ProbitSpec::differenced_cholesky(int k) const {
  if (k < 0 || k >= J) throw std::invalid_argument("differenced_cholesky: alternative out of range");
  Matrix D = Matrix::Zero(J - 1, J);
  for (int i = 0, r = 0; i < J; ++i) {
    if (i == k) continue;
    D(r, i) = 1.0;
    D(r, k) = -1.0;
    ++r;
  }
  return lower_cholesky(D * sigma * D.transpose(), "differenced covariance");
}

Vector utility_differences(const ConstRef& v, int k) {
  Vector w(v.size() - 1);
  for (Eigen::Index i = 0, r = 0; i < v.size(); ++i)
    if (i != k) w(r++) = v(k) - v(i);
  return w;
}

int simulate_probit_choice(const ProbitSpec& spec, const ConstRef& z) {
  auto engine = node_engine(z, spec.data_seed, 2);
  const Matrix L = lower_cholesky(spec.sigma, "ProbitSpec: Sigma");
  Vector G(spec.J);
  for (int j = 0; j < spec.J; ++j) G(j) = normal_icdf(unit_draw(engine));
  Vector v = covariates(z, spec.J, spec.q) * spec.theta + L * G;
  Eigen::Index k;
  v.maxCoeff(&k);
  return static_cast<int>(k);
}

NestedIntegrand mnp_choice_integrand(const ProbitSpec& spec, int k) {
  spec.validate();
  if (k >= spec.J) throw std::invalid_argument("mnp: alternative out of range");
  std::vector<Matrix> chol;
  for (int a = 0; a < spec.J; ++a) chol.push_back(spec.differenced_cholesky(a));
  NestedIntegrand f;
  f.name = "mnp_probability";
  f.outer_dim = spec.outer_dim();
  f.inner_dim = spec.inner_dim();
  f.outer_domain = Domain::unit_cube;
  f.inner_domain = Domain::unit_cube;
  f.theta = spec.theta;
  f.bind = [spec, chol, k](const ConstRef& z) -> NestedIntegrand::InnerKernel {
    const int kk = k >= 0 ? k : simulate_probit_choice(spec, z);
    const Vector w = utility_differences(covariates(z, spec.J, spec.q) * spec.theta, kk);
    const Matrix& L = chol[kk];
    return [w, L](const ConstRef& u, Eigen::Ref<Vector> out) { out(0) = genz_factors(L, w, u); };
  };
  f.link = [](const ConstRef&, const ConstRef& t, Eigen::Ref<Vector> out, ClampCounter&) { out(0) = t(0); };
  return f;
}

NestedIntegrand mnp_gmm_integrand(const ProbitSpec& spec) {
  spec.validate();
  std::vector<Matrix> chol;
  for (int a = 0; a < spec.J; ++a) chol.push_back(spec.differenced_cholesky(a));
  NestedIntegrand f;
  f.name = "mnp_gmm";
  f.outer_dim = spec.outer_dim();
  f.inner_dim = spec.inner_dim();
  f.outer_domain = Domain::unit_cube;
  f.inner_domain = Domain::unit_cube;
  f.theta = spec.theta;
  f.inner_components = 1 + 2 * spec.q;
  f.value_components = spec.q;
  const double h = spec.fd_step;
  f.bind = [spec, chol, h](const ConstRef& z) -> NestedIntegrand::InnerKernel {
    const int k = simulate_probit_choice(spec, z);
    const Matrix Z = covariates(z, spec.J, spec.q);
    Matrix W(spec.J - 1, 1 + 2 * spec.q);
    W.col(0) = utility_differences(Z * spec.theta, k);
    for (int j = 0; j < spec.q; ++j) {
      Vector tp = spec.theta, tm = spec.theta;
      tp(j) += h;
      tm(j) -= h;
      W.col(1 + 2 * j) = utility_differences(Z * tp, k);
      W.col(2 + 2 * j) = utility_differences(Z * tm, k);
    }
    const Matrix& L = chol[k];
    return [W, L](const ConstRef& u, Eigen::Ref<Vector> out) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) out(c) = genz_factors(L, W.col(c), u);
    };
  };
  const int q = spec.q;
  f.link = [q, h](const ConstRef&, const ConstRef& t, Eigen::Ref<Vector> out, ClampCounter& c) {
    const double p = clamp_floor(t(0), c);
    for (int j = 0; j < q; ++j) out(j) = (t(1 + 2 * j) - t(2 + 2 * j)) / (2.0 * h * p);
  };
  return f;
}

Vector gmm_moment(const ConstRef& y, const ConstRef& P, const Eigen::Ref<const Matrix>& gradP) {
  if (y.size() != P.size() || gradP.rows() != P.size())
    throw std::invalid_argument("gmm_moment: size mismatch");
  Vector m = Vector::Zero(gradP.cols());
  for (Eigen::Index j = 0; j < P.size(); ++j) m += (y(j) / P(j) - 1.0) * gradP.row(j).transpose();
  return m;
}

// --- mixed probit -----------------------------------------------------------------

Matrix uniform_covariates(int J, int q, std::uint64_t seed) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32)};
  std::mt19937_64 engine(seq);
  Matrix z(J, q);
  for (int i = 0; i < J; ++i)
    for (int j = 0; j < q; ++j) z(i, j) = unit_draw(engine);
  return z;
}

MixedProbitSpec MixedProbitSpec::standard() {
  MixedProbitSpec s;
  s.J = 5;
  s.q = 4;
  s.z = uniform_covariates(5, 4, 0);
  s.sigma = EquiCorrMatrix::make(5, 0.2).sigma;
  s.theta0 = Vector::Constant(4, 0.2);
  s.xi = EquiCorrMatrix::make(4, 0.1).sigma;
  return s;
}

void MixedProbitSpec::validate() const {
  if (J < 3 || q < 1) throw std::invalid_argument("MixedProbitSpec: need J >= 3 and q >= 1");
  if (z.rows() != J || z.cols() != q) throw std::invalid_argument("MixedProbitSpec: z must be J x q");
  if (theta0.size() != q) throw std::invalid_argument("MixedProbitSpec: theta0 must have q entries");
  check_square(sigma, J, "MixedProbitSpec: Sigma");
  check_square(xi, q, "MixedProbitSpec: Xi");
  lower_cholesky(xi, "MixedProbitSpec: Xi");
}

NestedIntegrand mixed_probit_integrand(const MixedProbitSpec& spec, int i) {
  spec.validate();
  if (i < 0 || i >= spec.J) throw std::invalid_argument("mixed_probit: alternative out of range");
  ProbitSpec inner;
  inner.J = spec.J;
  inner.q = spec.q;
  inner.theta = spec.theta0;
  inner.sigma = spec.sigma;
  const Matrix L = inner.differenced_cholesky(i);
  const Matrix Lxi = lower_cholesky(spec.xi, "MixedProbitSpec: Xi");
  NestedIntegrand f;
  f.name = "mixed_probit";
  f.outer_dim = spec.outer_dim();
  f.inner_dim = spec.inner_dim();
  f.outer_domain = Domain::gaussian;
  f.inner_domain = Domain::unit_cube;
  f.theta = spec.theta0;
  const Matrix Z = spec.z;
  const Vector theta0 = spec.theta0;
  f.bind = [Z, theta0, Lxi, L, i](const ConstRef& g) -> NestedIntegrand::InnerKernel {
    const Vector w = utility_differences(Z * (theta0 + Lxi * g), i);
    return [w, L](const ConstRef& u, Eigen::Ref<Vector> out) { out(0) = genz_factors(L, w, u); };
  };
  f.link = [](const ConstRef&, const ConstRef& t, Eigen::Ref<Vector> out, ClampCounter&) { out(0) = t(0); };
  return f;
}

}  // namespace stpq
