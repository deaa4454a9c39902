#include "qdag/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <thread>

#include "qdag/error.hpp"

namespace qdag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::span<const double> as_span(const double* data, Eigen::Index n) {
  return {data, static_cast<std::size_t>(n)};
}

double log_inv_gamma(double x, double shape, double rate) {
  // Terms that vary with either x or rate; the gamma function constant cancels.
  return shape * std::log(rate) - (shape + 1.0) * std::log(x) - rate / x;
}

double group_log_prior(const PxhsGroup& g, double sigma_m) {
  double lp = log_inv_gamma(g.c, 0.5, 1.0) + log_inv_gamma(g.T2, 0.5, 1.0 / g.c);
  const double inv_2s2 = 0.5 / (sigma_m * sigma_m);
  for (const auto& blk : g.blocks) {
    lp += log_inv_gamma(blk.zeta, 0.5, 1.0) + log_inv_gamma(blk.L2, 0.5, 1.0 / blk.zeta);
    const double var = g.T2 * blk.L2;
    lp += -0.5 * std::log(var) - blk.eta * blk.eta / (2.0 * var);
    lp -= (blk.xi - blk.m).squaredNorm() * inv_2s2;
  }
  return lp;
}

double edge_log_prior(const EdgeParamBlock& e, const PriorHyper& hyper, bool intercept) {
  if (!(e.threshold > 0.0)) return kNegInf;
  const double smu = intercept ? hyper.sigma_mu_intercept : hyper.sigma_mu;
  double lp = -e.mu * e.mu / (2.0 * smu * smu);
  lp += (hyper.a - 1.0) * std::log(e.threshold) - hyper.b * e.threshold;
  lp += group_log_prior(e.nonlinear, hyper.sigma_m);
  lp += group_log_prior(e.linear, hyper.sigma_m);
  return lp;
}

PxhsBlock& block_at(EdgeParamBlock& e, int block) {
  const int nq = static_cast<int>(e.nonlinear.blocks.size());
  return block < nq ? e.nonlinear.blocks[block] : e.linear.blocks[block - nq];
}

int block_count(const EdgeParamBlock& e) {
  return static_cast<int>(e.nonlinear.blocks.size() + e.linear.blocks.size());
}

}  // namespace

std::string to_string(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::oracle: return "oracle";
    case SamplerMode::qdagx: return "qdagx";
    case SamplerMode::misspecified: return "misspecified";
  }
  return "?";
}

SamplerMode parse_mode(const std::string& text) {
  if (text == "oracle") return SamplerMode::oracle;
  if (text == "qdagx") return SamplerMode::qdagx;
  if (text == "misspecified") return SamplerMode::misspecified;
  throw ConfigError("unknown mode '" + text + "' (expected oracle, qdagx or misspecified)");
}

std::string to_string(Mutation m) {
  switch (m) {
    case Mutation::none: return "none";
    case Mutation::t2_rate: return "T2_rate";
    case Mutation::c_rate: return "c_rate";
    case Mutation::l2_rate: return "L2_rate";
    case Mutation::zeta_rate: return "zeta_rate";
  }
  return "?";
}

std::string to_string(Family f) {
  switch (f) {
    case Family::eta: return "eta";
    case Family::xi: return "xi";
    case Family::mu: return "mu";
    case Family::t: return "t";
  }
  return "?";
}

SamplerConfig SamplerConfig::defaults(SamplerMode mode) {
  SamplerConfig cfg;
  cfg.mode = mode;
  if (mode == SamplerMode::qdagx) {
    cfg.iters = 5000;
    cfg.burnin = 2500;
  } else {
    cfg.iters = 20000;
    cfg.burnin = 10000;
  }
  cfg.thin = 10;
  return cfg;
}

void SamplerConfig::validate(int p) const {
  if (iters < 1 || burnin < 0 || burnin >= iters) {
    throw ConfigError("need 0 <= burnin < iters");
  }
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (!(step_eta > 0 && step_xi > 0 && step_mu > 0 && step_t_base > 0)) {
    throw ConfigError("random-walk step sizes must be positive");
  }
  if (step_t_z_min > step_t_z_max) throw ConfigError("empty threshold step exponent range");
  if (step_z_min > step_z_max) throw ConfigError("empty step exponent range");
  if (adapt_window < 1) throw ConfigError("adaptation window must be positive");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  hyper.validate();
  if (mode != SamplerMode::qdagx) {
    if (!ordering) throw ConfigError("mode " + to_string(mode) + " requires a node ordering");
    if (ordering->p() != p) throw DimensionError("ordering length does not match number of nodes");
    validate_ordering(*ordering);
  }
}

double AcceptanceRates::rate(Family f) const {
  const auto i = static_cast<std::size_t>(f);
  return proposed[i] > 0 ? static_cast<double>(accepted[i]) / static_cast<double>(proposed[i])
                         : 0.0;
}

void AcceptanceRates::merge(const AcceptanceRates& other) {
  for (int i = 0; i < kFamilyCount; ++i) {
    proposed[i] += other.proposed[i];
    accepted[i] += other.accepted[i];
  }
}

int PosteriorDraws::edge_index(int child, int parent) const {
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].child == child && edges[e].parent == parent) return static_cast<int>(e);
  }
  return -1;
}

Eigen::VectorXd PosteriorDraws::theta(std::size_t draw, std::size_t edge) const {
  return compute_theta(design, draws.at(draw).edges.at(edge));
}

Eigen::VectorXd PosteriorDraws::beta(std::size_t draw, std::size_t edge) const {
  const auto& params = draws.at(draw).edges.at(edge);
  Eigen::VectorXd th = compute_theta(design, params);
  if (edges.at(edge).is_intercept() && !threshold_intercept) return th;
  return compute_beta(th, params.threshold);
}

IndividualDagSet PosteriorDraws::dag_set(std::size_t draw) const {
  IndividualDagSet set;
  set.n = n;
  set.per_individual.assign(static_cast<std::size_t>(n), Adjacency(p));
  set.union_graph = Adjacency(p);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].is_intercept()) continue;
    const Eigen::VectorXd b = beta(draw, e);
    for (int i = 0; i < n; ++i) {
      if (b[i] != 0.0) {
        set.per_individual[static_cast<std::size_t>(i)].set(edges[e].child, edges[e].parent);
        set.union_graph.set(edges[e].child, edges[e].parent);
      }
    }
  }
  return set;
}

Adjacency PosteriorDraws::union_graph(std::size_t draw) const {
  Adjacency adj(p);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].is_intercept()) continue;
    if ((beta(draw, e).array() != 0.0).any()) adj.set(edges[e].child, edges[e].parent);
  }
  return adj;
}

std::vector<EdgeKey> model_edges(int p, SamplerMode mode, const NodeOrdering& ordering) {
  std::vector<EdgeKey> edges;
  std::vector<int> pos;
  if (mode != SamplerMode::qdagx) pos = ordering.positions();
  for (int h = 0; h < p; ++h) {
    edges.push_back({h, -1});
    for (int j = 0; j < p; ++j) {
      if (j == h) continue;
      if (mode == SamplerMode::qdagx || pos[j] > pos[h]) edges.push_back({h, j});
    }
  }
  return edges;
}

namespace gibbs {

double draw_T2(const PxhsGroup& g, Rng& rng, double rate_scale) {
  double ss = 0.0;
  for (const auto& blk : g.blocks) ss += blk.eta * blk.eta / blk.L2;
  const double shape = 0.5 * (1.0 + static_cast<double>(g.blocks.size()));
  return rng.inv_gamma(shape, rate_scale * (1.0 / g.c + 0.5 * ss));
}

double draw_c(const PxhsGroup& g, Rng& rng, double rate_scale) {
  return rng.inv_gamma(1.0, rate_scale * (1.0 + 1.0 / g.T2));
}

double draw_L2(const PxhsGroup& g, int k, Rng& rng, double rate_scale) {
  const auto& blk = g.blocks.at(static_cast<std::size_t>(k));
  return rng.inv_gamma(1.0, rate_scale * (1.0 / blk.zeta + 0.5 * blk.eta * blk.eta / g.T2));
}

double draw_zeta(const PxhsBlock& blk, Rng& rng, double rate_scale) {
  return rng.inv_gamma(1.0, rate_scale * (1.0 + 1.0 / blk.L2));
}

double m_plus_probability(double xi, double sigma_m) {
  // N(xi; +1, s^2) / [N(xi; +1, s^2) + N(xi; -1, s^2)] = 1 / (1 + exp(-2 xi / s^2))
  const double z = -2.0 * xi / (sigma_m * sigma_m);
  if (z > 0) {
    const double ez = std::exp(-z);
    return ez / (1.0 + ez);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double draw_m(double xi, double sigma_m, Rng& rng) {
  return rng.bernoulli(m_plus_probability(xi, sigma_m)) ? 1.0 : -1.0;
}

}  // namespace gibbs

int adapt_threshold_step(double rate, int z, int z_min, int z_max) {
  if (rate < 0.2) --z;
  else if (rate > 0.4) ++z;
  return std::clamp(z, z_min, z_max);
}

// ---------------------------------------------------------------------------

QdagChain::QdagChain(const Eigen::MatrixXd& y, const ModelDesign& design, QuantileLevel tau,
                     const SamplerConfig& cfg, std::vector<EdgeKey> edges, bool enforce_dag,
                     std::uint64_t seed)
    : y_(y),
      design_(design),
      tau_(tau),
      cfg_(cfg),
      edges_(std::move(edges)),
      enforce_dag_(enforce_dag),
      rng_(seed),
      p_(static_cast<int>(y.cols())),
      union_(static_cast<int>(y.cols())) {
  if (y.rows() != design.n()) throw DimensionError("responses and covariates differ in rows");
  const auto dims = design.reduced_dims();
  const std::size_t ne = edges_.size();
  params_.reserve(ne);
  node_edges_.assign(static_cast<std::size_t>(p_), {});
  for (std::size_t e = 0; e < ne; ++e) {
    const EdgeKey& k = edges_[e];
    if (k.child < 0 || k.child >= p_ || k.parent >= p_ || k.parent == k.child) {
      throw DimensionError("edge indices out of range");
    }
    EdgeParamBlock b = make_edge_block(dims);
    b.mu = 0.0;
    for (auto* g : {&b.nonlinear, &b.linear}) {
      for (auto& blk : g->blocks) blk.eta = 0.01;
    }
    b.threshold = rng_.gamma(cfg_.hyper.a, cfg_.hyper.b);
    params_.push_back(std::move(b));
    node_edges_[static_cast<std::size_t>(k.child)].push_back(static_cast<int>(e));
  }
  for (int f = 0; f < kFamilyCount; ++f) {
    z_[f].assign(ne, 0);
    window_acc_[f].assign(ne, 0);
    window_tries_[f].assign(ne, 0);
  }
  theta_.resize(ne);
  beta_.resize(ne);
  nonzero_.assign(ne, 0);
  fitted_.assign(static_cast<std::size_t>(p_), Eigen::VectorXd::Zero(design.n()));
  node_ll_.assign(static_cast<std::size_t>(p_), 0.0);
  union_count_.assign(static_cast<std::size_t>(p_) * p_, 0);
  rebuild_caches();
  if (enforce_dag_) {
    // Start from the empty graph: edges whose start value already crosses the
    // threshold are switched off by zeroing their eta.
    for (std::size_t e = 0; e < ne; ++e) {
      if (edges_[e].is_intercept() || nonzero_[e] == 0) continue;
      for (auto* g : {&params_[e].nonlinear, &params_[e].linear}) {
        for (auto& blk : g->blocks) blk.eta = 0.0;
      }
      if (std::abs(params_[e].mu) >= params_[e].threshold) params_[e].mu = 0.0;
    }
    rebuild_caches();
  }
}

Eigen::VectorXd QdagChain::parent_column(int e) const {
  const int j = edges_[static_cast<std::size_t>(e)].parent;
  if (j < 0) return Eigen::VectorXd::Ones(y_.rows());
  return y_.col(j);
}

void QdagChain::theta_of(const EdgeParamBlock& params, Eigen::VectorXd& out) const {
  out = compute_theta(design_, params);
}

void QdagChain::beta_of(int e, const Eigen::VectorXd& theta, double threshold,
                        Eigen::VectorXd& out) const {
  if (edges_[static_cast<std::size_t>(e)].is_intercept() && !cfg_.threshold_intercept) {
    out = theta;
    return;
  }
  out.resize(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) out[i] = threshold_value(theta[i], threshold);
}

void QdagChain::refresh_node(int node) {
  auto& f = fitted_[static_cast<std::size_t>(node)];
  f.setZero(y_.rows());
  for (int e : node_edges_[static_cast<std::size_t>(node)]) {
    const int j = edges_[static_cast<std::size_t>(e)].parent;
    if (j < 0) f += beta_[static_cast<std::size_t>(e)];
    else f += y_.col(j).cwiseProduct(beta_[static_cast<std::size_t>(e)]);
  }
  node_ll_[static_cast<std::size_t>(node)] =
      node_loglik(as_span(y_.col(node).data(), y_.rows()), as_span(f.data(), f.size()), tau_);
}

void QdagChain::rebuild_caches() {
  union_ = Adjacency(p_);
  std::fill(union_count_.begin(), union_count_.end(), 0);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    theta_of(params_[e], theta_[e]);
    beta_of(static_cast<int>(e), theta_[e], params_[e].threshold, beta_[e]);
    nonzero_[e] = static_cast<int>((beta_[e].array() != 0.0).count());
    const EdgeKey& k = edges_[e];
    if (!k.is_intercept() && nonzero_[e] > 0) {
      union_count_[static_cast<std::size_t>(k.child) * p_ + k.parent] += 1;
      union_.set(k.child, k.parent);
    }
  }
  for (int h = 0; h < p_; ++h) {
    if (!node_edges_[static_cast<std::size_t>(h)].empty()) refresh_node(h);
  }
}

double QdagChain::log_acceptance_ratio(int e, const EdgeParamBlock& proposal) const {
  const auto ue = static_cast<std::size_t>(e);
  const EdgeKey& k = edges_[ue];
  const double lp_new = edge_log_prior(proposal, cfg_.hyper, k.is_intercept());
  if (lp_new == kNegInf) return kNegInf;
  const double lp_old = edge_log_prior(params_[ue], cfg_.hyper, k.is_intercept());

  theta_of(proposal, scratch_theta_);
  beta_of(e, scratch_theta_, proposal.threshold, scratch_beta_);
  if (enforce_dag_ && !k.is_intercept() && nonzero_[ue] == 0 &&
      (scratch_beta_.array() != 0.0).any()) {
    if (creates_cycle(union_, k.child, k.parent)) return kNegInf;
  }
  const Eigen::VectorXd delta = scratch_beta_ - beta_[ue];
  Eigen::VectorXd fitted = fitted_[static_cast<std::size_t>(k.child)];
  if (k.is_intercept()) fitted += delta;
  else fitted += y_.col(k.parent).cwiseProduct(delta);
  const double ll_new = node_loglik(as_span(y_.col(k.child).data(), y_.rows()),
                                    as_span(fitted.data(), fitted.size()), tau_);
  return lik_weight_ * (ll_new - node_ll_[static_cast<std::size_t>(k.child)]) + lp_new - lp_old;
}

void QdagChain::set_params(int e, const EdgeParamBlock& params) {
  params_.at(static_cast<std::size_t>(e)) = params;
  rebuild_caches();
}

bool QdagChain::metropolis(int e, const EdgeParamBlock& proposal, double /*unused*/) {
  const double log_r = log_acceptance_ratio(e, proposal);
  if (log_r == kNegInf) return false;
  if (log_r < 0.0 && std::log(rng_.uniform()) >= log_r) return false;
  // The proposal's theta/beta are still in the scratch buffers.
  const auto ue = static_cast<std::size_t>(e);
  const EdgeKey& k = edges_[ue];
  params_[ue] = proposal;
  theta_[ue] = scratch_theta_;
  beta_[ue] = scratch_beta_;
  const int nz = static_cast<int>((beta_[ue].array() != 0.0).count());
  if (!k.is_intercept()) {
    const bool was_on = nonzero_[ue] > 0;
    const bool now_on = nz > 0;
    if (was_on != now_on) {
      auto& cnt = union_count_[static_cast<std::size_t>(k.child) * p_ + k.parent];
      cnt += now_on ? 1 : -1;
      union_.set(k.child, k.parent, cnt > 0);
    }
  }
  nonzero_[ue] = nz;
  refresh_node(k.child);
  return true;
}

bool QdagChain::rw_update(Family family, int e, int block, std::optional<double> step) {
  const auto ue = static_cast<std::size_t>(e);
  EdgeParamBlock prop = params_[ue];
  const auto fi = static_cast<std::size_t>(family);
  switch (family) {
    case Family::eta: {
      PxhsBlock& blk = block_at(prop, block);
      blk.eta += rng_.normal(0.0, step.value_or(step_size(family, e)));
      break;
    }
    case Family::xi: {
      PxhsBlock& blk = block_at(prop, block);
      const double s = step.value_or(step_size(family, e));
      for (int l = 0; l < blk.dim(); ++l) blk.xi[l] += rng_.normal(0.0, s);
      break;
    }
    case Family::mu:
      prop.mu += rng_.normal(0.0, step.value_or(step_size(family, e)));
      break;
    case Family::t:
      prop.threshold += rng_.normal(0.0, step.value_or(step_size(family, e)));
      break;
  }
  acc_.proposed[fi] += 1;
  const bool ok = metropolis(e, prop, 0.0);
  if (ok) acc_.accepted[fi] += 1;
  window_tries_[fi][ue] += 1;
  if (ok) window_acc_[fi][ue] += 1;
  return ok;
}

void QdagChain::gibbs_scales(EdgeParamBlock& p) {
  const double f = cfg_.mutation_factor;
  const Mutation mu = cfg_.mutation;
  // (b) global scales
  for (auto* g : {&p.nonlinear, &p.linear}) {
    g->T2 = gibbs::draw_T2(*g, rng_, mu == Mutation::t2_rate ? f : 1.0);
  }
  // (c) their auxiliaries
  for (auto* g : {&p.nonlinear, &p.linear}) {
    g->c = gibbs::draw_c(*g, rng_, mu == Mutation::c_rate ? f : 1.0);
  }
  // (d) local scales
  for (auto* g : {&p.nonlinear, &p.linear}) {
    for (std::size_t k = 0; k < g->blocks.size(); ++k) {
      g->blocks[k].L2 =
          gibbs::draw_L2(*g, static_cast<int>(k), rng_, mu == Mutation::l2_rate ? f : 1.0);
    }
  }
  // (e) local auxiliaries
  for (auto* g : {&p.nonlinear, &p.linear}) {
    for (auto& blk : g->blocks) {
      blk.zeta = gibbs::draw_zeta(blk, rng_, mu == Mutation::zeta_rate ? f : 1.0);
    }
  }
}

void QdagChain::sweep() {
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    const auto ue = static_cast<std::size_t>(e);
    const int nb = block_count(params_[ue]);
    for (int b = 0; b < nb; ++b) rw_update(Family::eta, e, b);  // (a)
    gibbs_scales(params_[ue]);                                 // (b)-(e)
    rw_update(Family::mu, e);                                  // (f)
    rw_update(Family::t, e);                                   // (g)
    for (int b = 0; b < nb; ++b) {                             // (h)
      PxhsBlock& blk = block_at(params_[ue], b);
      for (int l = 0; l < blk.dim(); ++l) blk.m[l] = gibbs::draw_m(blk.xi[l], cfg_.hyper.sigma_m, rng_);
    }
    for (int b = 0; b < nb; ++b) rw_update(Family::xi, e, b);  // (i)
  }
}

double QdagChain::step_size(Family f, int e) const {
  const int z = z_[static_cast<std::size_t>(f)][static_cast<std::size_t>(e)];
  switch (f) {
    case Family::eta: return cfg_.step_eta * std::ldexp(1.0, z);
    case Family::xi: return cfg_.step_xi * std::ldexp(1.0, z);
    case Family::mu: return cfg_.step_mu * std::ldexp(1.0, z);
    case Family::t: return cfg_.step_t_base * std::ldexp(1.0, z);
  }
  return 0.0;
}

void QdagChain::adapt_steps() {
  for (int f = 0; f < kFamilyCount; ++f) {
    const bool is_t = f == static_cast<int>(Family::t);
    const bool active = is_t || cfg_.adapt_all_steps;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      if (active && window_tries_[f][e] > 0) {
        const double rate =
            static_cast<double>(window_acc_[f][e]) / static_cast<double>(window_tries_[f][e]);
        z_[f][e] = is_t ? adapt_threshold_step(rate, z_[f][e], cfg_.step_t_z_min, cfg_.step_t_z_max)
                        : adapt_threshold_step(rate, z_[f][e], cfg_.step_z_min, cfg_.step_z_max);
      }
      window_acc_[f][e] = 0;
      window_tries_[f][e] = 0;
    }
  }
}

void QdagChain::set_data(const Eigen::MatrixXd& y) {
  if (y.rows() != y_.rows() || y.cols() != y_.cols()) {
    throw DimensionError("replacement data has a different shape");
  }
  y_ = y;
  rebuild_caches();
}

void QdagChain::draw_from_prior(int max_tries) {
  const auto dims = design_.reduced_dims();
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      params_[e] = sample_prior(cfg_.hyper, dims, rng_, edges_[e].is_intercept());
    }
    rebuild_caches();
    if (!enforce_dag_ || is_acyclic(union_)) return;
  }
  throw SearchError("could not draw an acyclic configuration from the prior");
}

double QdagChain::loglik() const {
  double s = 0.0;
  for (int h = 0; h < p_; ++h) {
    if (!node_edges_[static_cast<std::size_t>(h)].empty()) s += node_ll_[static_cast<std::size_t>(h)];
  }
  return s;
}

double QdagChain::log_prior() const {
  double s = 0.0;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    s += edge_log_prior(params_[e], cfg_.hyper, edges_[e].is_intercept());
  }
  return s;
}

Adjacency QdagChain::union_graph() const { return union_; }

double QdagChain::recompute_loglik() const {
  std::vector<Eigen::VectorXd> fitted(static_cast<std::size_t>(p_),
                                      Eigen::VectorXd::Zero(y_.rows()));
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    Eigen::VectorXd th = compute_theta(design_, params_[e]);
    Eigen::VectorXd b;
    if (edges_[e].is_intercept() && !cfg_.threshold_intercept) b = th;
    else b = compute_beta(th, params_[e].threshold);
    const int j = edges_[e].parent;
    auto& f = fitted[static_cast<std::size_t>(edges_[e].child)];
    if (j < 0) f += b;
    else f += y_.col(j).cwiseProduct(b);
  }
  double s = 0.0;
  for (int h = 0; h < p_; ++h) {
    if (node_edges_[static_cast<std::size_t>(h)].empty()) continue;
    const auto& f = fitted[static_cast<std::size_t>(h)];
    s += node_loglik(as_span(y_.col(h).data(), y_.rows()), as_span(f.data(), f.size()), tau_);
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct ChainResult {
  std::vector<int> edge_ids;  // positions in the merged edge list
  std::vector<QuantileDagDraw> draws;
  AcceptanceRates acceptance;
};

ChainResult run_one(const Eigen::MatrixXd& y, const ModelDesign& design, QuantileLevel tau,
                    const SamplerConfig& cfg, const std::vector<EdgeKey>& all_edges,
                    const std::vector<int>& ids, bool enforce_dag, std::uint64_t seed) {
  std::vector<EdgeKey> sub;
  sub.reserve(ids.size());
  for (int id : ids) sub.push_back(all_edges[static_cast<std::size_t>(id)]);
  QdagChain chain(y, design, tau, cfg, std::move(sub), enforce_dag, seed);
  ChainResult out;
  out.edge_ids = ids;
  out.draws.reserve(static_cast<std::size_t>((cfg.iters - cfg.burnin) / cfg.thin));
  const int anneal_iters = static_cast<int>(cfg.anneal_fraction * cfg.burnin);
  for (int it = 1; it <= cfg.iters; ++it) {
    if (it <= anneal_iters) {
      const double frac = static_cast<double>(it) / static_cast<double>(anneal_iters);
      chain.set_likelihood_weight(std::pow(cfg.anneal_start, 1.0 - frac));
    } else {
      chain.set_likelihood_weight(1.0);
    }
    chain.sweep();
    if (it <= cfg.burnin) {
      if (it % cfg.adapt_window == 0) chain.adapt_steps();
    } else if ((it - cfg.burnin) % cfg.thin == 0) {
      QuantileDagDraw d;
      d.iteration = it;
      d.loglik = chain.loglik();
      d.edges = chain.params();
      out.draws.push_back(std::move(d));
    }
  }
  out.acceptance = chain.acceptance();
  return out;
}

}  // namespace

PosteriorDraws run_chain(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x, QuantileLevel tau,
                         const SamplerConfig& cfg, int num_basis) {
  if (x.rows() != y.rows()) throw DimensionError("Y and X must have the same number of rows");
  if (!x.allFinite()) throw InputError("covariates contain non-finite values");
  return run_chain(y, make_design(x, num_basis), tau, cfg);
}

PosteriorDraws run_chain(const Eigen::MatrixXd& y, const ModelDesign& design, QuantileLevel tau,
                         const SamplerConfig& cfg) {
  const int p = static_cast<int>(y.cols());
  if (p < 1 || y.rows() < 1) throw DimensionError("empty response matrix");
  if (y.rows() != design.n()) throw DimensionError("Y and X must have the same number of rows");
  if (!y.allFinite()) throw InputError("responses contain non-finite values");
  cfg.validate(p);

  PosteriorDraws out;
  out.tau = tau.value();
  out.mode = cfg.mode;
  out.config = cfg;
  out.n = static_cast<int>(y.rows());
  out.p = p;
  out.design = design;
  out.threshold_intercept = cfg.threshold_intercept;
  out.ordering = cfg.mode == SamplerMode::qdagx ? identity_ordering(p) : *cfg.ordering;
  out.edges = model_edges(p, cfg.mode, out.ordering);

  std::vector<ChainResult> results;
  if (cfg.mode == SamplerMode::qdagx) {
    std::vector<int> ids(out.edges.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    results.push_back(run_one(y, design, tau, cfg, out.edges, ids, true, derive_seed(cfg.seed, 0)));
  } else {
    // Node likelihoods factorize: one independent chain per node.
    std::vector<std::vector<int>> per_node(static_cast<std::size_t>(p));
    for (std::size_t i = 0; i < out.edges.size(); ++i) {
      per_node[static_cast<std::size_t>(out.edges[i].child)].push_back(static_cast<int>(i));
    }
    results.resize(static_cast<std::size_t>(p));
    const int workers = std::min(cfg.workers, p);
    auto work = [&](int w) {
      for (int h = w; h < p; h += workers) {
        results[static_cast<std::size_t>(h)] =
            run_one(y, design, tau, cfg, out.edges, per_node[static_cast<std::size_t>(h)], false,
                    derive_seed(cfg.seed, static_cast<std::uint64_t>(h) + 1));
      }
    };
    if (workers <= 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
  }

  const std::size_t nd = results.front().draws.size();
  out.draws.resize(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    out.draws[d].iteration = results.front().draws[d].iteration;
    out.draws[d].edges.resize(out.edges.size());
  }
  for (auto& r : results) {
    out.acceptance.merge(r.acceptance);
    for (std::size_t d = 0; d < nd; ++d) {
      out.draws[d].loglik += r.draws[d].loglik;
      for (std::size_t i = 0; i < r.edge_ids.size(); ++i) {
        out.draws[d].edges[static_cast<std::size_t>(r.edge_ids[i])] =
            std::move(r.draws[d].edges[i]);
      }
    }
  }
  return out;
}

Eigen::MatrixXd sample_responses(const ModelDesign& design, const std::vector<EdgeKey>& edges,
                                 const std::vector<EdgeParamBlock>& params, int p, double tau,
                                 bool threshold_intercept, Rng& rng) {
  const int n = design.n();
  std::vector<Eigen::VectorXd> betas(edges.size());
  Adjacency adj(p);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    Eigen::VectorXd th = compute_theta(design, params[e]);
    betas[e] = (edges[e].is_intercept() && !threshold_intercept)
                   ? th
                   : compute_beta(th, params[e].threshold);
    if (!edges[e].is_intercept() && (betas[e].array() != 0.0).any()) {
      adj.set(edges[e].child, edges[e].parent);
    }
  }
  const NodeOrdering order = topological_order(adj);  // child first
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, p);
  for (int pos = p - 1; pos >= 0; --pos) {
    const int h = order.order[static_cast<std::size_t>(pos)];
    for (int i = 0; i < n; ++i) {
      double v = sample_al(rng, tau);
      for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].child != h) continue;
        const double b = betas[e][i];
        v += edges[e].is_intercept() ? b : b * y(i, edges[e].parent);
      }
      y(i, h) = v;
    }
  }
  return y;
}

}  // namespace qdag
