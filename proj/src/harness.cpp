#include "stpq/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "stpq/models.hpp"
#include "stpq/parallel.hpp"

namespace stpq {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double to_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw std::invalid_argument("bad number for " + what + ": '" + text + "'");
  return v;
}

long long to_integer(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    throw std::invalid_argument("bad integer for " + what + ": '" + text + "'");
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// --- names ------------------------------------------------------------------

NamedOptions NamedOptions::parse(const std::string& text) {
  NamedOptions n;
  const auto colon = text.find(':');
  n.name = trim(text.substr(0, colon));
  if (n.name.empty()) throw std::invalid_argument("empty name in '" + text + "'");
  if (colon == std::string::npos) return n;
  for (const auto& item : split(text.substr(colon + 1), ',')) {
    if (trim(item).empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("option without '=' in '" + text + "'");
    n.options[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  return n;
}

double NamedOptions::number(const std::string& key, double fallback) const {
  const auto it = options.find(key);
  return it == options.end() ? fallback : to_number(it->second, name + ":" + key);
}

int NamedOptions::integer(const std::string& key, int fallback) const {
  const auto it = options.find(key);
  return it == options.end() ? fallback : int(to_integer(it->second, name + ":" + key));
}

namespace {

void check_options(const NamedOptions& n, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : n.options)
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw std::invalid_argument("unknown option '" + k + "' for '" + n.name + "'");
}

RuleFamily1D rule_by_name(const std::string& id) {
  if (id == "cc") return RuleFamily1D::clenshaw_curtis();
  if (id == "gl") return RuleFamily1D::gauss(WeightedInterval::unit_interval);
  if (id == "glag") return RuleFamily1D::gauss(WeightedInterval::half_line);
  if (id == "gh") return RuleFamily1D::gauss(WeightedInterval::real_line);
  if (id == "gg-log") return RuleFamily1D::generalized_gauss(Psi::neg_log1m);
  if (id == "gg-asinh") return RuleFamily1D::generalized_gauss(Psi::arcsinh_atanh);
  if (id == "gg-erf") return RuleFamily1D::generalized_gauss(Psi::inv_erf);
  throw std::invalid_argument("unknown 1-D rule '" + id + "'");
}

}  // namespace

CubatureFamily make_family(const std::string& spec, int d, Domain target) {
  const auto n = NamedOptions::parse(spec);
  const std::string& id = n.name;
  if (id == "mc" || id == "sobol" || id == "halton") {
    check_options(n, {});
    if (id == "mc") return CubatureFamily::mc(d, target);
    if (id == "sobol") return CubatureFamily::sobol(d, target);
    return CubatureFamily::halton(d, target);
  }
  if (id == "frolov") {
    check_options(n, {"r"});
    return CubatureFamily::frolov(d, n.integer("r", 2));
  }
  if (id.rfind("sg-", 0) == 0 || id.rfind("pg-", 0) == 0) {
    check_options(n, {"r"});
    const auto rule = rule_by_name(id.substr(3));
    return id[0] == 's' ? CubatureFamily::smolyak(rule, d, n.integer("r", 2))
                        : CubatureFamily::product(rule, d, n.integer("r", 2));
  }
  if (id == "ow-mc" || id == "ow-sobol") {
    check_options(n, {"r"});
    return CubatureFamily::optimal_weights(id == "ow-mc" ? CubatureFamily::Kind::mc : CubatureFamily::Kind::sobol,
                                           d, n.integer("r", 1));
  }
  throw std::invalid_argument("unknown cubature family '" + id + "' (see --list)");
}

NestedIntegrand make_model(const std::string& spec) {
  const auto n = NamedOptions::parse(spec);
  if (n.name == "synthetic") {
    check_options(n, {"theta"});
    return synthetic_integrand(n.number("theta", 4.0));
  }
  if (n.name == "mixed-logit") {
    check_options(n, {"J", "q", "rho", "data_seed", "alt"});
    MixedLogitSpec s;
    s.J = n.integer("J", 3);
    s.q = n.integer("q", 4);
    s.u0 = Eigen::VectorXd::Zero(s.q);
    s.sigma = EquiCorrMatrix::make(s.q, n.number("rho", 0.1)).sigma;
    s.data_seed = std::uint64_t(n.integer("data_seed", 0));
    return mixed_logit_integrand(s, n.integer("alt", -1));
  }
  if (n.name == "mnp" || n.name == "mnp-gmm") {
    check_options(n, {"J", "q", "rho", "theta", "data_seed", "alt", "h"});
    ProbitSpec s;
    s.J = n.integer("J", 5);
    s.q = n.integer("q", 3);
    s.theta = Eigen::VectorXd::Constant(s.q, n.number("theta", 1.0));
    s.sigma = EquiCorrMatrix::make(s.J, n.number("rho", 0.1)).sigma;
    s.data_seed = std::uint64_t(n.integer("data_seed", 0));
    s.fd_step = n.number("h", 1e-4);
    if (n.name == "mnp") return mnp_choice_integrand(s, n.integer("alt", -1));
    return mnp_gmm_integrand(s);
  }
  if (n.name == "mixed-probit") {
    check_options(n, {"J", "q", "rho", "xi_rho", "theta0", "zseed", "alt"});
    MixedProbitSpec s;
    s.J = n.integer("J", 5);
    s.q = n.integer("q", 4);
    s.z = uniform_covariates(s.J, s.q, std::uint64_t(n.integer("zseed", 0)));
    s.sigma = EquiCorrMatrix::make(s.J, n.number("rho", 0.2)).sigma;
    s.theta0 = Eigen::VectorXd::Constant(s.q, n.number("theta0", 0.2));
    s.xi = EquiCorrMatrix::make(s.q, n.number("xi_rho", 0.1)).sigma;
    return mixed_probit_integrand(s, n.integer("alt", 0));
  }
  throw std::invalid_argument("unknown model '" + n.name + "' (see --list)");
}

std::vector<std::pair<std::string, std::string>> model_catalog() {
  return {
      {"synthetic[:theta=4]", "log of int u^(z+theta-1) e^-u du over z in [0,1]; closed-form reference"},
      {"mixed-logit[:J=3,q=4,rho=0.1,data_seed=0,alt=-1]", "log mixed-logit probability of the simulated choice"},
      {"mnp[:J=5,q=3,theta=1,rho=0.1,data_seed=0,alt=-1]", "multinomial probit probability via the Genz transform"},
      {"mnp-gmm[:J=5,q=3,theta=1,rho=0.1,data_seed=0,h=1e-4]", "q-vector GMM moment grad P / P of the probit model"},
      {"mixed-probit[:J=5,q=4,rho=0.2,xi_rho=0.1,theta0=0.2,zseed=0,alt=0]", "probit probability mixed over Gaussian theta"},
  };
}

std::vector<std::pair<std::string, std::string>> family_catalog() {
  return {
      {"mc", "i.i.d. sampling (randomized, nested prefixes)"},
      {"sobol", "Sobol sequence, Joe-Kuo directions, d <= 32"},
      {"halton", "Halton sequence, d <= 32"},
      {"frolov[:r=2]", "Frolov lattice on (0,1)^d, d <= 4"},
      {"sg-cc[:r=2]", "Smolyak over Clenshaw-Curtis (nested)"},
      {"sg-gl[:r=2]", "Smolyak over Gauss-Legendre on [0,1]"},
      {"sg-glag[:r=2]", "Smolyak over Gauss-Laguerre"},
      {"sg-gh[:r=2]", "Smolyak over Gauss-Hermite (standard normal)"},
      {"sg-gg-log[:r=2]", "Smolyak over generalized Gauss, psi = -log(1-x)"},
      {"sg-gg-asinh[:r=2]", "Smolyak over generalized Gauss, psi = asinh(2 atanh(2x-1)/pi)"},
      {"sg-gg-erf[:r=2]", "Smolyak over generalized Gauss, psi = erfinv(2x-1)"},
      {"pg-<rule>[:r=2]", "full tensor grid of any rule above (cc, gl, glag, gh, gg-*)"},
      {"ow-mc[:r=1]", "optimal weights on i.i.d. nodes (randomized)"},
      {"ow-sobol[:r=1]", "optimal weights on Sobol nodes"},
  };
}

// --- config -------------------------------------------------------------------

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) {
    const std::string p = trim(part);
    if (p.empty()) continue;
    const auto dots = p.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_number(p, "L"));
      continue;
    }
    std::string rest = p.substr(dots + 2);
    double step = 1.0;
    if (const auto c = rest.find(':'); c != std::string::npos) {
      step = to_number(rest.substr(c + 1), "L step");
      rest = rest.substr(0, c);
    }
    const double a = to_number(p.substr(0, dots), "L"), b = to_number(rest, "L");
    if (!(step > 0.0) || b < a) throw std::invalid_argument("bad L range '" + p + "'");
    for (int k = 0; a + k * step <= b + 1e-9; ++k) out.push_back(a + k * step);
  }
  if (out.empty()) throw std::invalid_argument("empty L range");
  for (double L : out)
    if (!(L > 0.0)) throw std::invalid_argument("L values must be positive");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(text, ',')) {
    const std::string p = trim(part);
    if (p.empty()) continue;
    const auto dots = p.find("..");
    if (dots == std::string::npos) {
      const long long v = to_integer(p, "seed");
      if (v < 0) throw std::invalid_argument("seeds must be nonnegative: '" + p + "'");
      out.push_back(std::uint64_t(v));
      continue;
    }
    const long long a = to_integer(p.substr(0, dots), "seed"), b = to_integer(p.substr(dots + 2), "seed");
    if (a < 0 || b < a) throw std::invalid_argument("bad seed range '" + p + "'");
    for (long long s = a; s <= b; ++s) out.push_back(std::uint64_t(s));
  }
  if (out.empty()) throw std::invalid_argument("empty seed list");
  return out;
}

void StudyConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "model") model = value;
  else if (key == "outer") outer = value;
  else if (key == "inner") inner = value;
  else if (key == "mode") {
    if (value == "ftp") mode = StudyMode::ftp;
    else if (value == "stp") mode = StudyMode::stp;
    else if (value == "both") mode = StudyMode::both;
    else throw std::invalid_argument("mode must be ftp, stp or both");
  } else if (key == "sigma") {
    if (value == "auto") sigma.reset();
    else {
      sigma = to_number(value, "sigma");
      if (!(*sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    }
  } else if (key == "L") L = parse_levels(value);
  else if (key == "seeds") seeds = parse_seeds(value);
  else if (key == "out") out = value;
  else if (key == "threads") {
    threads = int(to_integer(value, "threads"));
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  } else if (key == "timing") {
    if (value == "on" || value == "true" || value == "1") timing = true;
    else if (value == "off" || value == "false" || value == "0") timing = false;
    else throw std::invalid_argument("timing must be on or off");
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

void StudyConfig::validate() const {
  if (L.empty()) throw std::invalid_argument("config: L range is empty");
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
}

StudyConfig parse_config(std::istream& in, StudyConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    try {
      base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

StudyConfig load_config(const std::string& path, StudyConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_config(in, std::move(base));
}

// --- study ----------------------------------------------------------------------

namespace {

bool level_valid(const std::string& mode, double sigma, double L) {
  if (!(L > 0.0)) return false;
  if (mode == "stp") return in_index_set(IndexKind::sg, sigma, L, 1, 1);
  const double eps = 1e-9 * std::max(1.0, L);
  return std::floor(L / sigma + eps) >= 1 && std::floor(sigma * L + eps) >= 1;
}

struct Cell {
  std::string mode;
  double L;
  std::uint64_t seed;
  bool ok = false;
  std::string error;
  TensorQuadResult result;
  double wall_ms = 0;
};

}  // namespace

StudyOutcome run_study(const StudyConfig& config) {
  config.validate();
  const NestedIntegrand model = make_model(config.model);
  const CubatureFamily outer = make_family(config.outer, model.outer_dim, model.outer_domain);
  const CubatureFamily inner = make_family(config.inner, model.inner_dim, model.inner_domain);
  const NestedIntegrand f = adapt_domains(model, outer.domain(), inner.domain());

  std::vector<std::uint64_t> seeds = config.seeds;
  if (seeds.empty()) {
    const int count = outer.randomized() || inner.randomized() ? 20 : 1;
    for (int s = 0; s < count; ++s) seeds.push_back(std::uint64_t(s));
  }

  StudyOutcome outcome;
  outcome.sigma = config.sigma ? *config.sigma : sigma_plan(outer.rates().s, inner.rates().s, f.holder_alpha).sigma;
  const double sigma = outcome.sigma;

  std::vector<std::string> modes;
  if (config.mode != StudyMode::stp) modes.push_back("ftp");
  if (config.mode != StudyMode::ftp) modes.push_back("stp");

  // every requested level plus its silent predecessor, per (mode, seed)
  std::vector<Cell> cells;
  std::map<std::tuple<std::string, double, std::uint64_t>, std::size_t> where;
  for (const auto& mode : modes)
    for (std::uint64_t seed : seeds) {
      std::set<double> levels(config.L.begin(), config.L.end());
      for (double L : config.L)
        if (level_valid(mode, sigma, L - 1.0)) levels.insert(L - 1.0);
      for (double L : levels) {
        where[{mode, L, seed}] = cells.size();
        Cell cell;
        cell.mode = mode;
        cell.L = L;
        cell.seed = seed;
        cells.push_back(std::move(cell));
      }
    }

  parallel_for(cells.size(), config.threads, [&](std::size_t c) {
    Cell& cell = cells[c];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cell.result = cell.mode == "stp" ? stp_quadrature(f, outer, inner, sigma, cell.L, cell.seed)
                                       : ftp_quadrature(f, outer, inner, sigma, cell.L, cell.seed);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    cell.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& mode : modes)
    for (double L : config.L)
      for (std::uint64_t seed : seeds) {
        const Cell& cell = cells[where.at({mode, L, seed})];
        ConvergenceRecord r;
        r.mode = mode;
        r.L = L;
        r.seed = seed;
        r.wall_ms = config.timing ? cell.wall_ms : 0.0;
        if (!cell.ok) {
          char head[96];
          std::snprintf(head, sizeof head, "cell (%s, L=%g, seed=%llu) failed: ", mode.c_str(), L,
                        static_cast<unsigned long long>(seed));
          outcome.errors.push_back(head + cell.error);
          try {
            r.N = node_count(mode == "stp" ? IndexKind::sg : IndexKind::fg, sigma, L, outer, inner);
          } catch (const std::exception&) {
            r.N = 0;
          }
          r.value = nan;
          r.rel_error = nan;
          if (f.exact_value) r.abs_error = nan;
          outcome.records.push_back(r);
          continue;
        }
        const auto& res = cell.result;
        r.N = res.total_work;
        r.value = res.scalar();
        r.clamp_count = res.clamp_count;
        if (f.exact_value) {
          Eigen::VectorXd diff = res.value;
          diff.array() -= *f.exact_value;
          r.abs_error = diff.norm();
        }
        if (auto it = where.find({mode, L - 1.0, seed}); it != where.end()) {
          const Cell& prev = cells[it->second];
          r.rel_error = prev.ok ? (res.value - prev.result.value).norm() / res.value.norm() : nan;
        }
        outcome.records.push_back(r);
      }
  return outcome;
}

// --- CSV --------------------------------------------------------------------------

void write_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << r.mode << ',' << fmt(r.L) << ',' << r.N << ',' << fmt(r.value) << ','
       << (r.rel_error ? fmt(*r.rel_error) : "") << ',' << (r.abs_error ? fmt(*r.abs_error) : "") << ','
       << r.clamp_count << ',' << r.seed << ',' << fmt(r.wall_ms) << '\n';
  }
}

std::vector<ConvergenceRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kCsvHeader)
    throw std::invalid_argument("read_csv: missing or unexpected header");
  std::vector<ConvergenceRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 9) throw std::invalid_argument("read_csv: line " + std::to_string(lineno) + " has " +
                                                   std::to_string(f.size()) + " fields");
    ConvergenceRecord r;
    r.mode = f[0];
    r.L = to_number(f[1], "L");
    r.N = to_integer(f[2], "N");
    r.value = to_number(f[3], "value");
    if (!f[4].empty()) r.rel_error = to_number(f[4], "rel_error");
    if (!f[5].empty()) r.abs_error = to_number(f[5], "abs_error");
    r.clamp_count = to_integer(f[6], "clamp_count");
    r.seed = std::uint64_t(std::stoull(f[7]));
    r.wall_ms = to_number(f[8], "wall_ms");
    out.push_back(r);
  }
  return out;
}

// --- slopes -------------------------------------------------------------------------

double fit_slope(const std::vector<double>& N, const std::vector<double>& error) {
  if (N.size() != error.size()) throw std::invalid_argument("fit_slope: size mismatch");
  std::map<double, std::vector<double>> groups;
  for (std::size_t i = 0; i < N.size(); ++i)
    if (N[i] > 0.0 && error[i] > 0.0 && std::isfinite(error[i])) groups[N[i]].push_back(error[i]);
  if (groups.size() < 4)
    throw std::invalid_argument("fit_slope: fewer than 4 usable work levels (" + std::to_string(groups.size()) + ")");
  std::vector<double> x, y;
  for (auto& [n, errs] : groups) {
    std::sort(errs.begin(), errs.end());
    const std::size_t m = errs.size();
    const double med = m % 2 ? errs[m / 2] : 0.5 * (errs[m / 2 - 1] + errs[m / 2]);
    x.push_back(std::log2(n));
    y.push_back(std::log2(med));
  }
  const double k = double(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

double fit_slope(const std::vector<ConvergenceRecord>& records, const std::string& mode,
                 std::pair<double, double> work_range, ErrorMeasure measure) {
  std::vector<double> N, err;
  for (const auto& r : records) {
    if (r.mode != mode || double(r.N) < work_range.first || double(r.N) > work_range.second) continue;
    const auto& e = measure == ErrorMeasure::abs ? r.abs_error : r.rel_error;
    if (!e) continue;
    N.push_back(double(r.N));
    err.push_back(*e);
  }
  return fit_slope(N, err);
}

}  // namespace stpq
