#include <cmath>
#include <iomanip>
#include <sstream>

#include "qdag/error.hpp"
#include "qdag/sampler.hpp"

namespace qdag {

namespace {

struct TestFunctions {
  std::vector<std::string> names;

  explicit TestFunctions(const std::vector<EdgeKey>& edges, int p) {
    for (const auto& k : edges) {
      const std::string tag =
          k.is_intercept() ? "b" + std::to_string(k.child + 1) + "0"
                           : "b" + std::to_string(k.child + 1) + std::to_string(k.parent + 1);
      for (const char* f : {"atan_mu", "log_T2_nl", "log_c_nl", "log_L2_nl", "log_zeta_nl",
                            "log1p_eta2_nl", "xi_m_nl", "t", "log_T2_lin", "log1p_eta2_lin",
                            "frac_nonzero"}) {
        names.push_back(tag + "." + f);
      }
    }
    for (int h = 0; h < p; ++h) {
      names.push_back("Y" + std::to_string(h + 1) + ".mean_tanh");
      names.push_back("Y" + std::to_string(h + 1) + ".mean_tanh2");
    }
  }

  void eval(const std::vector<EdgeKey>& edges, const std::vector<EdgeParamBlock>& params,
            const ModelDesign& design, const PriorHyper& hyper, const Eigen::MatrixXd& y,
            std::vector<double>& out) const {
    out.clear();
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const EdgeParamBlock& b = params[e];
      const double smu = edges[e].is_intercept() ? hyper.sigma_mu_intercept : hyper.sigma_mu;
      const PxhsBlock& nl = b.nonlinear.blocks.front();
      const PxhsBlock& lin = b.linear.blocks.front();
      out.push_back(std::atan(b.mu / smu));
      out.push_back(std::log(b.nonlinear.T2));
      out.push_back(std::log(b.nonlinear.c));
      out.push_back(std::log(nl.L2));
      out.push_back(std::log(nl.zeta));
      out.push_back(std::log1p(nl.eta * nl.eta));
      out.push_back(nl.xi[0] * nl.m[0]);
      out.push_back(b.threshold);
      out.push_back(std::log(b.linear.T2));
      out.push_back(std::log1p(lin.eta * lin.eta));
      const Eigen::VectorXd beta = compute_beta(compute_theta(design, b), b.threshold);
      out.push_back(static_cast<double>((beta.array() != 0.0).count()) /
                    static_cast<double>(beta.size()));
    }
    for (Eigen::Index h = 0; h < y.cols(); ++h) {
      const Eigen::ArrayXd t = y.col(h).array().tanh();
      out.push_back(t.mean());
      out.push_back(t.square().mean());
    }
  }
};

}  // namespace

double GewekeReport::max_abs_z() const {
  double m = 0.0;
  for (double v : z) m = std::max(m, std::abs(v));
  return m;
}

std::string GewekeReport::to_string() const {
  std::ostringstream os;
  os << "geweke rounds=" << rounds << " functions=" << names.size() << "\n";
  os << std::setprecision(4);
  for (std::size_t i = 0; i < names.size(); ++i) {
    os << "  " << std::left << std::setw(22) << names[i] << " mc=" << std::setw(10)
       << mean_marginal[i] << " sc=" << std::setw(10) << mean_successive[i] << " z=" << z[i]
       << "\n";
  }
  return os.str();
}

GewekeReport geweke_joint_test(const GewekeConfig& cfg) {
  if (cfg.p < 1 || cfg.p > 4 || cfg.q < 1 || cfg.q > 3 || cfg.n < 5 || cfg.n > 200) {
    throw ConfigError("the joint-distribution test expects a tiny problem");
  }
  if (cfg.segment_rounds < 1 || cfg.rounds < 2L * cfg.segment_rounds) {
    throw ConfigError("need at least two successive-conditional segments");
  }
  SamplerConfig sc = cfg.sampler;
  sc.mode = cfg.mode;
  sc.mutation = cfg.mutation;
  sc.mutation_factor = cfg.mutation_factor;
  sc.hyper.validate();

  Rng rng(derive_seed(cfg.seed, 11));
  Eigen::MatrixXd x(cfg.n, cfg.q);
  for (int i = 0; i < cfg.n; ++i) {
    for (int k = 0; k < cfg.q; ++k) x(i, k) = rng.normal();
  }
  const ModelDesign design = make_design(x, cfg.num_basis);
  const NodeOrdering ident = identity_ordering(cfg.p);
  const std::vector<EdgeKey> edges = model_edges(cfg.p, cfg.mode, ident);
  const bool enforce = cfg.mode == SamplerMode::qdagx;
  const QuantileLevel tau(cfg.tau);
  const TestFunctions tf(edges, cfg.p);
  const std::size_t nf = tf.names.size();

  // Marginal-conditional simulator: independent prior draws, then data.
  std::vector<double> sum_mc(nf, 0.0), sumsq_mc(nf, 0.0), vals;
  {
    Eigen::MatrixXd y0 = Eigen::MatrixXd::Zero(cfg.n, cfg.p);
    QdagChain holder(y0, design, tau, sc, edges, enforce, derive_seed(cfg.seed, 12));
    Rng data_rng(derive_seed(cfg.seed, 13));
    for (long r = 0; r < cfg.rounds; ++r) {
      holder.draw_from_prior();
      const Eigen::MatrixXd y = sample_responses(design, edges, holder.params(), cfg.p, cfg.tau,
                                                 sc.threshold_intercept, data_rng);
      tf.eval(edges, holder.params(), design, sc.hyper, y, vals);
      for (std::size_t i = 0; i < nf; ++i) {
        sum_mc[i] += vals[i];
        sumsq_mc[i] += vals[i] * vals[i];
      }
    }
  }

  // Successive-conditional simulator: alternate sampler transitions with
  // fresh data drawn given the current parameters.
  const long segments = cfg.rounds / cfg.segment_rounds;
  std::vector<std::vector<double>> seg_sum(nf, std::vector<double>(segments, 0.0));
  {
    Eigen::MatrixXd y0 = Eigen::MatrixXd::Zero(cfg.n, cfg.p);
    QdagChain chain(y0, design, tau, sc, edges, enforce, derive_seed(cfg.seed, 14));
    Rng data_rng(derive_seed(cfg.seed, 15));
    for (long s = 0; s < segments; ++s) {
      chain.draw_from_prior();
      chain.set_data(sample_responses(design, edges, chain.params(), cfg.p, cfg.tau,
                                      sc.threshold_intercept, data_rng));
      for (int r = 0; r < cfg.segment_rounds; ++r) {
        for (int k = 0; k < cfg.sweeps_per_round; ++k) chain.sweep();
        chain.set_data(sample_responses(design, edges, chain.params(), cfg.p, cfg.tau,
                                        sc.threshold_intercept, data_rng));
        tf.eval(edges, chain.params(), design, sc.hyper, chain.data(), vals);
        for (std::size_t i = 0; i < nf; ++i) seg_sum[i][static_cast<std::size_t>(s)] += vals[i];
      }
    }
  }

  GewekeReport rep;
  rep.names = tf.names;
  rep.rounds = segments * cfg.segment_rounds;
  const double R = static_cast<double>(cfg.rounds);
  const double S = static_cast<double>(segments);
  const double len = static_cast<double>(cfg.segment_rounds);
  for (std::size_t i = 0; i < nf; ++i) {
    const double m1 = sum_mc[i] / R;
    const double v1 = std::max(0.0, sumsq_mc[i] / R - m1 * m1) / R;
    double m2 = 0.0;
    for (double s : seg_sum[i]) m2 += s / len;
    m2 /= S;
    double vs = 0.0;
    for (double s : seg_sum[i]) {
      const double d = s / len - m2;
      vs += d * d;
    }
    const double v2 = vs / (S - 1.0) / S;
    rep.mean_marginal.push_back(m1);
    rep.mean_successive.push_back(m2);
    const double se = std::sqrt(v1 + v2);
    rep.z.push_back(se > 0 ? (m1 - m2) / se : 0.0);
  }
  return rep;
}

}  // namespace qdag
