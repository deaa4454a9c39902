#include "qdag/selection.hpp"

#include <cmath>
#include <limits>

#include "qdag/error.hpp"

namespace qdag {

double inclusion_probability(double T, double L) {
  if (!(T > 0 && L > 0)) throw InputError("scales must be positive");
  const double s = T * T * L * L;
  return s / (1.0 + s);  // == 1 - 1/(1+s), without cancellation for small s
}

EdgePosterior edge_posterior_probs(const PosteriorDraws& draws) {
  if (draws.draws.empty()) throw InputError("empty draw archive");
  EdgePosterior out;
  out.n = draws.n;
  out.p = draws.p;
  out.probs = Array3(draws.n, draws.p, draws.p);
  // Integer counts keep the result exact regardless of the number of draws.
  std::vector<long> counts(out.probs.size(), 0);
  for (std::size_t d = 0; d < draws.draws.size(); ++d) {
    for (std::size_t e = 0; e < draws.edges.size(); ++e) {
      const EdgeKey& k = draws.edges[e];
      if (k.is_intercept()) continue;
      const Eigen::VectorXd b = draws.beta(d, e);
      for (int i = 0; i < draws.n; ++i) {
        if (b[i] != 0.0) {
          counts[(static_cast<std::size_t>(i) * draws.p + k.child) * draws.p + k.parent] += 1;
        }
      }
    }
  }
  const double nd = static_cast<double>(draws.draws.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.probs.data()[i] = static_cast<double>(counts[i]) / nd;
  }
  return out;
}

CovariatePosterior covariate_posterior_probs(const PosteriorDraws& draws) {
  if (draws.draws.empty()) throw InputError("empty draw archive");
  const int p = draws.p, q = draws.q();
  CovariatePosterior out;
  out.p = p;
  out.q = q;
  out.linear = Array3(p, p, q);
  out.nonlinear = Array3(p, p, q);
  out.probs = Array3(p, p, q);
  const double nd = static_cast<double>(draws.draws.size());
  for (std::size_t e = 0; e < draws.edges.size(); ++e) {
    const EdgeKey& key = draws.edges[e];
    if (key.is_intercept()) continue;
    for (int k = 0; k < q; ++k) {
      double lin = 0.0, nl = 0.0;
      for (const auto& d : draws.draws) {
        const EdgeParamBlock& b = d.edges[e];
        const auto uk = static_cast<std::size_t>(k);
        nl += inclusion_probability(std::sqrt(b.nonlinear.T2),
                                    std::sqrt(b.nonlinear.blocks[uk].L2));
        lin += inclusion_probability(std::sqrt(b.linear.T2), std::sqrt(b.linear.blocks[uk].L2));
      }
      out.nonlinear(key.child, key.parent, k) = nl / nd;
      out.linear(key.child, key.parent, k) = lin / nd;
      out.probs(key.child, key.parent, k) = std::max(nl / nd, lin / nd);
    }
  }
  return out;
}

std::string to_string(FdrRule rule) { return rule == FdrRule::truth ? "truth" : "bayesian"; }

std::vector<double> fdr_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 99; ++i) g.push_back(i / 100.0);
  return g;
}

double truth_fdr(std::span<const double> probs, const std::vector<bool>& truth, double threshold) {
  if (truth.size() != probs.size()) throw DimensionError("truth and probabilities differ in size");
  long sel = 0, fp = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > threshold) {
      ++sel;
      if (!truth[i]) ++fp;
    }
  }
  return sel > 0 ? static_cast<double>(fp) / static_cast<double>(sel) : 0.0;
}

double bayesian_fdr(std::span<const double> probs, double threshold) {
  long sel = 0;
  double s = 0.0;
  for (double v : probs) {
    if (v >= threshold) {
      ++sel;
      s += 1.0 - v;
    }
  }
  return s / static_cast<double>(std::max(1L, sel));
}

FdrResult fdr_select(std::span<const double> probs, const std::vector<bool>* truth, double target) {
  if (probs.empty()) throw InputError("no probabilities to select from");
  if (!(target > 0.0 && target < 1.0)) throw ConfigError("FDR target must lie in (0,1)");
  const auto grid = fdr_grid();
  FdrResult r;
  if (truth) {
    r.rule = FdrRule::truth;
    double best = std::numeric_limits<double>::infinity();
    for (double t : grid) {
      const double f = truth_fdr(probs, *truth, t);
      if (std::abs(f - target) < best) {  // strict: ties keep the smaller threshold
        best = std::abs(f - target);
        r.threshold = t;
        r.achieved_fdr = f;
      }
    }
    r.selected.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) r.selected[i] = probs[i] > r.threshold;
    return r;
  }
  r.rule = FdrRule::bayesian;
  r.threshold = grid.back();
  r.achieved_fdr = bayesian_fdr(probs, r.threshold);
  for (double t : grid) {
    const double f = bayesian_fdr(probs, t);
    if (f <= target) {
      r.threshold = t;
      r.achieved_fdr = f;
      break;
    }
  }
  r.selected.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) r.selected[i] = probs[i] >= r.threshold;
  return r;
}

EdgeSelection select_edges(const EdgePosterior& post, const Array3* truth, double target) {
  const int n = post.n, p = post.p;
  if (truth && !truth->same_shape(post.probs)) throw DimensionError("truth shape mismatch");
  EdgeSelection out;
  out.selected = Array3(n, p, p);
  out.rule = truth ? FdrRule::truth : FdrRule::bayesian;
  for (int h = 0; h < p; ++h) {
    std::vector<double> pool;
    std::vector<bool> tpool;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) {
        if (j == h) continue;
        pool.push_back(post.probs(i, h, j));
        if (truth) tpool.push_back((*truth)(i, h, j) != 0.0);
      }
    }
    if (pool.empty()) {
      out.thresholds.push_back(0.0);
      out.achieved_fdr.push_back(0.0);
      continue;
    }
    const FdrResult r = fdr_select(pool, truth ? &tpool : nullptr, target);
    out.thresholds.push_back(r.threshold);
    out.achieved_fdr.push_back(r.achieved_fdr);
    std::size_t c = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) {
        if (j == h) continue;
        out.selected(i, h, j) = r.selected[c++] ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

CovariateSelection select_covariates(const CovariatePosterior& post, const Array3* truth,
                                     double target) {
  const int p = post.p, q = post.q;
  if (truth && !truth->same_shape(post.probs)) throw DimensionError("truth shape mismatch");
  CovariateSelection out;
  out.selected = Array3(p, p, q);
  out.rule = truth ? FdrRule::truth : FdrRule::bayesian;
  for (int h = 0; h < p; ++h) {
    std::vector<double> pool;
    std::vector<bool> tpool;
    for (int j = 0; j < p; ++j) {
      if (j == h) continue;
      for (int k = 0; k < q; ++k) {
        pool.push_back(post.probs(h, j, k));
        if (truth) tpool.push_back((*truth)(h, j, k) != 0.0);
      }
    }
    if (pool.empty()) {
      out.thresholds.push_back(0.0);
      out.achieved_fdr.push_back(0.0);
      continue;
    }
    const FdrResult r = fdr_select(pool, truth ? &tpool : nullptr, target);
    out.thresholds.push_back(r.threshold);
    out.achieved_fdr.push_back(r.achieved_fdr);
    std::size_t c = 0;
    for (int j = 0; j < p; ++j) {
      if (j == h) continue;
      for (int k = 0; k < q; ++k) out.selected(h, j, k) = r.selected[c++] ? 1.0 : 0.0;
    }
  }
  return out;
}

}  // namespace qdag
