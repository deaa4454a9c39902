#include "qdag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qdag/error.hpp"
#include "qdag/selection.hpp"

namespace qdag {

Rates selection_rates(const std::vector<bool>& selected, const std::vector<bool>& truth) {
  if (selected.size() != truth.size()) throw DimensionError("selection and truth differ in size");
  long tp = 0, fn = 0, fp = 0, tn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) (selected[i] ? tp : fn)++;
    else (selected[i] ? fp : tn)++;
  }
  Rates r;
  r.tpr_defined = tp + fn > 0;
  r.fpr_defined = fp + tn > 0;
  if (r.tpr_defined) r.tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.fpr_defined) r.fpr = static_cast<double>(fp) / static_cast<double>(fp + tn);
  return r;
}

double auc(std::span<const double> scores, const std::vector<bool>& truth) {
  if (scores.size() != truth.size()) throw DimensionError("scores and truth differ in size");
  std::vector<double> neg, pos;
  for (std::size_t i = 0; i < scores.size(); ++i) (truth[i] ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty()) throw DegenerateError("AUC needs both positives and negatives");
  std::sort(neg.begin(), neg.end());
  // Twice the Mann-Whitney count stays an exact integer.
  long long twice = 0;
  for (double s : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), s);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), s);
    twice += 2 * (lo - neg.begin()) + (hi - lo);
  }
  return static_cast<double>(twice) / 2.0 /
         (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

namespace {

template <class Pool>
NodeAverages node_averages(int p, Pool&& pool_for) {
  NodeAverages out;
  double st = 0, sf = 0, sa = 0;
  for (int h = 0; h < p; ++h) {
    std::vector<double> sc;
    std::vector<bool> sel, tr;
    pool_for(h, sc, sel, tr);
    const Rates r = selection_rates(sel, tr);
    if (r.tpr_defined) {
      st += r.tpr;
      ++out.tpr_nodes;
    }
    if (r.fpr_defined) {
      sf += r.fpr;
      ++out.fpr_nodes;
    }
    if (r.tpr_defined && r.fpr_defined) {
      sa += auc(sc, tr);
      ++out.auc_nodes;
    }
  }
  if (out.tpr_nodes) out.tpr = st / out.tpr_nodes;
  if (out.fpr_nodes) out.fpr = sf / out.fpr_nodes;
  if (out.auc_nodes) out.auc = sa / out.auc_nodes;
  return out;
}

}  // namespace

NodeAverages node_averages_y(const Array3& scores, const Array3& selected, const Array3& truth) {
  if (!scores.same_shape(truth) || !selected.same_shape(truth)) {
    throw DimensionError("metric arrays differ in shape");
  }
  const int n = truth.dim0(), p = truth.dim1();
  return node_averages(p, [&](int h, auto& sc, auto& sel, auto& tr) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) {
        if (j == h) continue;
        sc.push_back(scores(i, h, j));
        sel.push_back(selected(i, h, j) != 0.0);
        tr.push_back(truth(i, h, j) != 0.0);
      }
    }
  });
}

NodeAverages node_averages_x(const Array3& scores, const Array3& selected, const Array3& truth) {
  if (!scores.same_shape(truth) || !selected.same_shape(truth)) {
    throw DimensionError("metric arrays differ in shape");
  }
  const int p = truth.dim0(), q = truth.dim2();
  return node_averages(p, [&](int h, auto& sc, auto& sel, auto& tr) {
    for (int j = 0; j < p; ++j) {
      if (j == h) continue;
      for (int k = 0; k < q; ++k) {
        sc.push_back(scores(h, j, k));
        sel.push_back(selected(h, j, k) != 0.0);
        tr.push_back(truth(h, j, k) != 0.0);
      }
    }
  });
}

double estimation_norm(const Array3& est, const Array3& truth, bool unknown_ordering) {
  if (!est.same_shape(truth)) throw DimensionError("estimate and truth differ in shape");
  if (truth.dim0() < 1) throw DimensionError("no individuals");
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = est.data()[i] - truth.data()[i];
    ss += d * d;
  }
  double v = std::sqrt(ss / truth.dim0());
  if (unknown_ordering) v /= std::sqrt(2.0);
  return v;
}

EstimationNorms estimation_norms(const Array3& beta_est, const Array3& beta_true,
                                 const Array3& theta_est, const Array3& theta_true,
                                 SamplerMode mode) {
  const bool unknown = mode == SamplerMode::qdagx;
  return {estimation_norm(beta_est, beta_true, unknown),
          estimation_norm(theta_est, theta_true, unknown)};
}

double adjusted_mse(const Eigen::MatrixXd& q_true, const Eigen::MatrixXd& q_est) {
  if (q_true.rows() != q_est.rows() || q_true.cols() != q_est.cols()) {
    throw DimensionError("quantile matrices differ in shape");
  }
  const Eigen::Index n = q_true.rows(), p = q_true.cols();
  if (n < 1) throw DimensionError("no individuals");
  double total = 0.0;
  for (Eigen::Index h = 1; h <= p; ++h) {
    const double denom = static_cast<double>(std::max<Eigen::Index>(1, (p - h) / 5) + 1);
    total += (q_true.col(h - 1) - q_est.col(h - 1)).squaredNorm() / denom;
  }
  return total / static_cast<double>(n);
}

PointEstimates posterior_mean_estimates(const PosteriorDraws& draws, const Eigen::MatrixXd& y) {
  if (draws.draws.empty()) throw InputError("empty draw archive");
  const int n = draws.n, p = draws.p, q = draws.q();
  if (y.rows() != n || y.cols() != p) throw DimensionError("Y does not match the archive");
  PointEstimates out;
  out.theta = Array3(n, p, p);
  out.beta = Array3(n, p, p);
  out.theta0 = Eigen::MatrixXd::Zero(n, p);
  out.beta0 = Eigen::MatrixXd::Zero(n, p);
  const double nd = static_cast<double>(draws.draws.size());
  for (std::size_t e = 0; e < draws.edges.size(); ++e) {
    // Posterior means of mu, alpha* = eta xi, alpha0 = eta0 xi0 and t.
    Eigen::VectorXd th = Eigen::VectorXd::Zero(n);
    double mu = 0.0, t = 0.0;
    std::vector<Eigen::VectorXd> a_nl(static_cast<std::size_t>(q));
    std::vector<double> a_lin(static_cast<std::size_t>(q), 0.0);
    for (int k = 0; k < q; ++k) {
      a_nl[static_cast<std::size_t>(k)] = Eigen::VectorXd::Zero(draws.design.bases[k].reduced_dim);
    }
    for (const auto& d : draws.draws) {
      const EdgeParamBlock& b = d.edges[e];
      mu += b.mu;
      t += b.threshold;
      for (int k = 0; k < q; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        a_nl[uk] += b.nonlinear.blocks[uk].alpha();
        a_lin[uk] += b.linear.blocks[uk].eta * b.linear.blocks[uk].xi[0];
      }
    }
    th.setConstant(mu / nd);
    for (int k = 0; k < q; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      th.noalias() += draws.design.bases[uk].design_reduced * (a_nl[uk] / nd);
      th += (a_lin[uk] / nd) * draws.design.covariates.col(k);
    }
    t /= nd;
    const EdgeKey& key = draws.edges[e];
    for (int i = 0; i < n; ++i) {
      const double bv =
          (key.is_intercept() && !draws.threshold_intercept) ? th[i] : threshold_value(th[i], t);
      if (key.is_intercept()) {
        out.theta0(i, key.child) = th[i];
        out.beta0(i, key.child) = bv;
      } else {
        out.theta(i, key.child, key.parent) = th[i];
        out.beta(i, key.child, key.parent) = bv;
      }
    }
  }
  out.quantile = out.beta0;
  for (int i = 0; i < n; ++i) {
    for (int h = 0; h < p; ++h) {
      for (int j = 0; j < p; ++j) {
        if (j != h) out.quantile(i, h) += y(i, j) * out.beta(i, h, j);
      }
    }
  }
  return out;
}

std::vector<std::string> MetricReport::names() {
  return {"TPR_Y", "FPR_Y", "AUC_Y", "TPR_X", "FPR_X", "AUC_X", "norm_beta", "norm_theta", "MSE"};
}

std::vector<double> MetricReport::values() const {
  return {tpr_y, fpr_y, auc_y, tpr_x, fpr_x, auc_x, norm_beta, norm_theta, mse};
}

Array3 covariate_truth(const SimTruth& truth) {
  Array3 out(truth.p, truth.p, truth.q);
  for (int h = 0; h < truth.p; ++h) {
    for (int j : truth.parents[static_cast<std::size_t>(h)]) {
      for (int k : truth.edge_form(h, j).chosen) out(h, j, k) = 1.0;
    }
  }
  return out;
}

Array3 edge_truth(const SimTruth& truth, int g) {
  const Array3& b = truth.beta.at(static_cast<std::size_t>(g));
  Array3 out(b.dim0(), b.dim1(), b.dim2());
  for (std::size_t i = 0; i < b.size(); ++i) out.data()[i] = b.data()[i] != 0.0 ? 1.0 : 0.0;
  return out;
}

namespace {

MetricReport score(const EdgePosterior& ep, const CovariatePosterior& cp, const PointEstimates& est,
                   const SimTruth& truth, int g, SamplerMode mode, double fdr_target) {
  MetricReport r;
  r.tau = truth.tau_grid[static_cast<std::size_t>(g)];
  r.mode = to_string(mode);

  const Array3 etruth = edge_truth(truth, g);
  const EdgeSelection es = select_edges(ep, &etruth, fdr_target);
  const NodeAverages ay = node_averages_y(ep.probs, es.selected, etruth);
  r.tpr_y = ay.tpr;
  r.fpr_y = ay.fpr;
  r.auc_y = ay.auc;
  r.node_thresholds = es.thresholds;

  const Array3 ctruth = covariate_truth(truth);
  const CovariateSelection cs = select_covariates(cp, &ctruth, fdr_target);
  const NodeAverages ax = node_averages_x(cp.probs, cs.selected, ctruth);
  r.tpr_x = ax.tpr;
  r.fpr_x = ax.fpr;
  r.auc_x = ax.auc;

  const auto gi = static_cast<std::size_t>(g);
  const EstimationNorms norms =
      estimation_norms(est.beta, truth.beta[gi], est.theta, truth.theta[gi], mode);
  r.norm_beta = norms.beta;
  r.norm_theta = norms.theta;
  r.mse = adjusted_mse(truth.quantile[gi], est.quantile);
  return r;
}

}  // namespace

MetricReport evaluate(const PosteriorDraws& draws, const SimTruth& truth, const Eigen::MatrixXd& y,
                      double fdr_target) {
  const int g = truth.grid_index(draws.tau);
  if (g < 0) throw InputError("archive quantile level is not on the truth grid");
  if (draws.n != truth.n || draws.p != truth.p || draws.q() != truth.q) {
    throw DimensionError("archive and truth dimensions differ");
  }
  return score(edge_posterior_probs(draws), covariate_posterior_probs(draws),
               posterior_mean_estimates(draws, y), truth, g, draws.mode, fdr_target);
}

MetricReport evaluate_truth(const SimTruth& truth, double tau, double fdr_target) {
  const int g = truth.grid_index(tau);
  if (g < 0) throw InputError("quantile level is not on the truth grid");
  const auto gi = static_cast<std::size_t>(g);
  EdgePosterior ep;
  ep.n = truth.n;
  ep.p = truth.p;
  ep.probs = edge_truth(truth, g);
  CovariatePosterior cp;
  cp.p = truth.p;
  cp.q = truth.q;
  cp.probs = covariate_truth(truth);
  cp.linear = cp.probs;
  cp.nonlinear = cp.probs;
  PointEstimates est;
  est.beta = truth.beta[gi];
  est.theta = truth.theta[gi];
  est.quantile = truth.quantile[gi];
  return score(ep, cp, est, truth, g, SamplerMode::oracle, fdr_target);
}

}  // namespace qdag
