#include "graphrank/covariate_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "graphrank/errors.hpp"
#include "graphrank/spectral.hpp"

namespace graphrank {

Psi Psi::difference() {
  return Psi("diff", [](std::span<const double> u, std::span<const double> v) {
    std::vector<double> out(u.size());
    for (std::size_t a = 0; a < u.size(); ++a) out[a] = u[a] - v[a];
    return out;
  });
}

Psi Psi::custom(std::string name, Function f) {
  if (!f) throw DataError("psi '" + name + "' has no function");
  const std::vector<std::vector<double>> probes = {
      {1.0, 0.0}, {0.0, 1.0}, {0.5, -2.0}, {3.0, 7.25}, {-1.5, 0.125}};
  for (std::size_t a = 0; a < probes.size(); ++a) {
    for (std::size_t b = 0; b < probes.size(); ++b) {
      const auto fw = f(probes[a], probes[b]);
      const auto bw = f(probes[b], probes[a]);
      bool ok = fw.size() == bw.size();
      for (std::size_t c = 0; ok && c < fw.size(); ++c) {
        ok = std::abs(fw[c] + bw[c]) <= 1e-12 * (1.0 + std::abs(fw[c]));
      }
      if (!ok) throw DataError("psi '" + name + "' is not antisymmetric");
    }
  }
  return Psi(std::move(name), std::move(f));
}

Psi Psi::named(const std::string& name) {
  if (name == "diff") return difference();
  throw ConfigError("psi", "unknown covariate rule '" + name + "' (available: diff)");
}

std::vector<double> Psi::operator()(std::span<const double> u, std::span<const double> v) const {
  if (u.size() != v.size()) throw DataError("per-side covariate vectors differ in length");
  return f_(u, v);
}

ComparisonRecord combine(const SidedComparison& c, const Psi& psi) {
  return ComparisonRecord{c.i, c.j, c.y, psi(c.xi, c.xj)};
}

Eigen::MatrixXd CovariateDesign::design_matrix() const {
  Eigen::MatrixXd h(m.rows(), m.cols() + x.cols());
  h << m, x;
  return h;
}

CovariateDesign build_design(std::span<const ComparisonRecord> records, std::size_t item_count) {
  if (item_count < 2) throw DataError("a design needs at least two items");
  if (records.empty()) throw DataError("no comparisons to build a design from");
  const std::size_t p = records.front().x.size();

  // Canonical orientation, then a stable sort keeps the k order within an edge.
  std::vector<ComparisonRecord> canon;
  canon.reserve(records.size());
  for (std::size_t row = 0; row < records.size(); ++row) {
    const ComparisonRecord& r = records[row];
    if (r.x.size() != p) {
      throw DataError("ragged covariates: record " + std::to_string(row) + " has " +
                      std::to_string(r.x.size()) + " values, expected " + std::to_string(p));
    }
    if (r.i >= item_count || r.j >= item_count) throw DataError("item index out of range");
    if (r.i == r.j) throw DataError("an item cannot be compared with itself");
    ComparisonRecord c = r;
    if (c.i > c.j) {
      std::swap(c.i, c.j);
      c.y = -c.y;
      for (double& v : c.x) v = -v;
    }
    canon.push_back(std::move(c));
  }
  std::stable_sort(canon.begin(), canon.end(), [](const ComparisonRecord& a, const ComparisonRecord& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });

  const auto n = static_cast<Eigen::Index>(canon.size());
  CovariateDesign d;
  d.item_count = item_count;
  d.m = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(item_count));
  d.x.resize(n, static_cast<Eigen::Index>(p));
  d.y.resize(n);
  for (Eigen::Index row = 0; row < n; ++row) {
    const ComparisonRecord& c = canon[static_cast<std::size_t>(row)];
    d.m(row, static_cast<Eigen::Index>(c.i)) = 1.0;
    d.m(row, static_cast<Eigen::Index>(c.j)) = -1.0;
    for (std::size_t a = 0; a < p; ++a) d.x(row, static_cast<Eigen::Index>(a)) = c.x[a];
    d.y[row] = c.y;
  }
  return d;
}

CovariateDesign build_design(std::span<const SidedComparison> records, std::size_t item_count,
                             const Psi& psi) {
  std::vector<ComparisonRecord> combined;
  combined.reserve(records.size());
  for (const SidedComparison& c : records) combined.push_back(combine(c, psi));
  CovariateDesign d = build_design(combined, item_count);
  d.psi_name = psi.name();
  return d;
}

CovariateDesign center_covariates(CovariateDesign design) {
  if (design.x.rows() > 0) design.x.rowwise() -= design.x.colwise().mean();
  return design;
}

IdentifiabilityReport check_identifiability(const CovariateDesign& design) {
  IdentifiabilityReport rep;
  const Eigen::MatrixXd lap = design.laplacian();
  rep.components = laplacian_components(lap);
  const auto k = static_cast<Eigen::Index>(design.item_count);
  rep.rank_m = k - static_cast<Eigen::Index>(rep.components.size());
  const Eigen::Index p = design.covariate_count();

  if (p > 0) {
    const Eigen::MatrixXd h = design.design_matrix();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_h(h);
    const Eigen::VectorXd& sh = svd_h.singularValues();
    const double tol = rank_tolerance(std::max(h.rows(), h.cols()), sh.size() ? sh[0] : 0.0);
    Eigen::Index rank_h = 0;
    while (rank_h < sh.size() && sh[rank_h] > tol) ++rank_h;
    rep.rank_residual_x = std::max<Eigen::Index>(rank_h - rep.rank_m, 0);

    if (rep.rank_residual_x < p) {
      // Residual of X after projecting onto im(M); its near-null right singular
      // vectors are the covariate combinations confounded with merits.
      const Eigen::MatrixXd n_pinv = pinv_symmetric(lap);
      const Eigen::MatrixXd resid = design.x - design.m * (n_pinv * (design.m.transpose() * design.x));
      Eigen::JacobiSVD<Eigen::MatrixXd> svd_x(resid, Eigen::ComputeFullV);
      const Eigen::Index deficient = p - rep.rank_residual_x;
      for (Eigen::Index c = p - deficient; c < p; ++c) {
        rep.offending_directions.push_back(svd_x.matrixV().col(c));
      }
    }
  }
  rep.identifiable = rep.rank_m == k - 1 && rep.rank_residual_x == p;
  return rep;
}

CovariateFit fit_with_covariates(const CovariateDesign& design, const Constraint& constraint,
                                 VarianceDivisor divisor) {
  const Eigen::Index n = design.rows();
  if (n == 0) throw DataError("no comparisons to fit");
  CovariateFit out;
  out.identifiability = check_identifiability(design);
  const IdentifiabilityReport& rep = out.identifiability;
  if (rep.components.size() > 1) {
    throw IdentifiabilityError("comparison graph is disconnected: " +
                                   std::to_string(rep.components.size()) + " components",
                               rep.components);
  }
  if (!rep.identifiable) {
    std::vector<std::vector<double>> dirs;
    for (const Eigen::VectorXd& d : rep.offending_directions) dirs.emplace_back(d.data(), d.data() + d.size());
    throw IdentifiabilityError("covariates are not identifiable: some combination lies in the span of the incidence matrix",
                               {}, std::move(dirs));
  }

  const std::size_t k = design.item_count;
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::Index p = design.covariate_count();
  const Eigen::MatrixXd& m = design.m;
  const Eigen::MatrixXd& x = design.x;

  const Eigen::MatrixXd lap = design.laplacian();
  out.n_pinv = pinv_laplacian(lap);
  const Eigen::VectorXd s = design.scores();
  const Eigen::MatrixXd mtx = m.transpose() * x;

  out.beta_hat = Eigen::VectorXd::Zero(p);
  if (p > 0) {
    const Eigen::MatrixXd x_resid = x - m * (out.n_pinv * mtx);
    const Eigen::MatrixXd gram = x_resid.transpose() * x_resid;
    out.beta_hat = gram.ldlt().solve(x_resid.transpose() * design.y);
  }
  const Eigen::MatrixXd c_v = constraint.projector(k);
  out.mu_hat = c_v * (out.n_pinv * (s - mtx * out.beta_hat));
  out.constraint = constraint;
  out.n = static_cast<std::size_t>(n);

  const Eigen::VectorXd resid = design.y - m * out.mu_hat - x * out.beta_hat;
  out.residual_ss = resid.squaredNorm();
  double denom = static_cast<double>(n);
  if (divisor == VarianceDivisor::degrees_of_freedom) {
    denom -= static_cast<double>(kk - 1 + p);
    if (denom <= 0.0) throw DataError("too few comparisons for the degrees-of-freedom variance");
  }
  out.sigma2_hat = out.residual_ss / denom;
  out.perfect_fit = out.sigma2_hat <= 1e-24 * std::max(1.0, design.y.squaredNorm());

  Eigen::MatrixXd hth(kk + p, kk + p);
  hth << lap, mtx, mtx.transpose(), x.transpose() * x;
  Eigen::VectorXd kernel = Eigen::VectorXd::Zero(kk + p);
  kernel.head(kk).setOnes();
  const Eigen::MatrixXd hth_pinv = pinv_symmetric(hth, kernel / std::sqrt(static_cast<double>(kk)));
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(kk + p, kk + p);
  t.topLeftCorner(kk, kk) = c_v;
  out.cov = out.sigma2_hat * t * hth_pinv * t.transpose();

  if (p > 0) out.angle_phi = principal_angle(m, x);
  out.rank = ranks(out.mu_hat);
  return out;
}

Eigen::VectorXd misspecification_bias(const CovariateDesign& design, const Eigen::VectorXd& beta) {
  if (beta.size() != design.covariate_count()) throw DataError("beta length does not match covariate count");
  const Eigen::MatrixXd n_pinv = pinv_laplacian(design.laplacian());
  return n_pinv * (design.m.transpose() * (design.x * beta));
}

double akl_normal(const CovariateDesign& design, const Eigen::VectorXd& mu_t,
                  const Eigen::VectorXd& beta, const Eigen::VectorXd& mu_m, double sigma2) {
  if (!(sigma2 > 0.0)) throw DataError("akl_normal needs sigma2 > 0");
  if (beta.size() != design.covariate_count()) throw DataError("beta length does not match covariate count");
  const auto k = static_cast<Eigen::Index>(design.item_count);
  if (mu_t.size() != k || mu_m.size() != k) throw DataError("merit vector length does not match item count");
  const Eigen::VectorXd d = mu_t - mu_m;
  const Eigen::VectorXd xb = design.x * beta;
  const double quad = d.dot(design.laplacian() * d);
  const double cross = 2.0 * xb.dot(design.m * d);
  const double cov_term = xb.squaredNorm();
  return (quad + cross + cov_term) / (2.0 * static_cast<double>(design.rows()) * sigma2);
}

double hajek_sidak_ratio(const CovariateDesign& design) {
  const Eigen::MatrixXd h = design.design_matrix();
  if (h.rows() == 0) throw DataError("empty design");
  const double max_row = h.rowwise().squaredNorm().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.transpose() * h, Eigen::EigenvaluesOnly);
  const double lambda2 = es.eigenvalues()[1];
  if (lambda2 <= 0.0) throw IdentifiabilityError("lambda2(H'H) is zero; design is not identifiable");
  return max_row / lambda2;
}

}  // namespace graphrank
