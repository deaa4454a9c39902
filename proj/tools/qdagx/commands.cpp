#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "common.hpp"
#include "json.hpp"
#include "qdag/aggregate.hpp"
#include "qdag/graph.hpp"
#include "qdag/io.hpp"
#include "qdag/metrics.hpp"
#include "qdag/rng.hpp"
#include "qdag/sampler.hpp"
#include "qdag/selection.hpp"
#include "qdag/simdata.hpp"

namespace qdagx {

using nlohmann::json;
using qdag::format_double;

namespace {

int exit_code_for(const std::string& kind) {
  if (kind == "io") return kIo;
  if (kind == "input" || kind == "config" || kind == "dimension" || kind == "cycle" ||
      kind == "search" || kind == "degenerate") {
    return kInput;
  }
  return kFailure;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  int p = 25;
  int q = 2;
  int n = 100;
  int replicates = 1;
  int replicate = 0;  // run only this replicate (1-based) straight into --out
  std::uint64_t seed = 1;
  double threshold = -1.0;
  std::string out;
};

void write_one_bundle(const fs::path& dir, const SimulateOptions& o, std::uint64_t seed,
                      const Invocation& inv) {
  qdag::SimSettings s;
  s.n = o.n;
  s.p = o.p;
  s.q = o.q;
  s.seed = seed;
  s.threshold = o.threshold;
  const qdag::SimDataset ds = qdag::simulate(s);
  qdag::write_bundle(dir, ds, s);
  json cfg = {{"n", o.n}, {"p", o.p}, {"q", o.q}, {"seed", seed}, {"threshold", ds.truth.threshold}};
  finish_manifest(dir, inv, cfg.dump(), seed, {});
}

void run_simulate(const SimulateOptions& o, const Invocation& inv) {
  if (o.p < 2 || o.q < 1 || o.n < 2) throw qdag::InputError("need p >= 2, q >= 1 and n >= 2");
  if (o.replicates < 1) throw qdag::InputError("--replicates must be at least 1");
  const fs::path out(o.out);
  if (o.replicate > 0) {
    write_one_bundle(out, o, qdag::replicate_seed(o.seed, o.replicate), inv);
    return;
  }
  if (o.replicates == 1) {
    write_one_bundle(out, o, o.seed, inv);
    return;
  }
  fs::create_directories(out);
  for (int r = 1; r <= o.replicates; ++r) {
    char name[32];
    std::snprintf(name, sizeof(name), "rep_%03d", r);
    Invocation sub = inv;
    sub.args = without_flag(inv.args, "--replicates");
    sub.args = with_flag(sub.args, "--replicate", std::to_string(r));
    sub.args = with_flag(sub.args, "--out", (out / name).generic_string());
    write_one_bundle(out / name, o, qdag::replicate_seed(o.seed, r), sub);
  }
  json cfg = {{"n", o.n}, {"p", o.p}, {"q", o.q}, {"replicates", o.replicates}, {"seed", o.seed}};
  finish_manifest(out, inv, cfg.dump(), o.seed, {});
}

// ---------------------------------------------------------------- fit

struct FitOptions {
  std::string y, x, bundle, ordering_file, out;
  std::vector<double> taus;
  std::string mode = "qdagx";
  std::optional<double> kendall_target;
  std::optional<int> iters, burnin, thin;
  std::uint64_t seed = 1;
  int num_basis = qdag::kDefaultNumBasis;
  bool zscore_on = false;
  bool zscore_off = false;
  double a = 10.0;
  double b = 10.0;
  std::optional<double> edge_strength;
  int workers = 0;
  bool flat = false;  // single tau written straight into --out
};

struct InputData {
  Eigen::MatrixXd y, x;
  std::vector<std::string> names;
  std::optional<qdag::NodeOrdering> true_ordering;  // known for bundles
};

InputData load_inputs(const FitOptions& o) {
  InputData d;
  if (!o.bundle.empty()) {
    if (!o.y.empty() || !o.x.empty()) throw qdag::InputError("give either --bundle or --y/--x");
    const qdag::SimDataset ds = qdag::read_bundle(o.bundle);
    d.y = ds.y;
    d.x = ds.x;
    d.names = qdag::read_csv_table(fs::path(o.bundle) / "Y.csv", true).header;
    d.true_ordering = qdag::topological_order(ds.truth.dag());
    return d;
  }
  if (o.y.empty() || o.x.empty()) throw qdag::InputError("--y and --x are required without --bundle");
  const qdag::Table yt = qdag::read_csv_table(o.y, true);
  const qdag::Table xt = qdag::read_csv_table(o.x, true);
  if (yt.values.rows() != xt.values.rows()) throw qdag::DimensionError("Y and X have different row counts");
  if (yt.ids != xt.ids) throw qdag::InputError("Y and X ids do not match row by row");
  d.y = yt.values;
  d.x = xt.values;
  d.names = yt.header;
  return d;
}

void zscore_columns(Eigen::MatrixXd& x) {
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double mean = x.col(k).mean();
    const double sd = std::sqrt((x.col(k).array() - mean).square().sum() / (n - 1.0));
    if (!(sd > 0.0)) throw qdag::InputError("covariate column " + std::to_string(k + 1) + " is constant");
    x.col(k) = (x.col(k).array() - mean) / sd;
  }
}

qdag::NodeOrdering read_ordering(const fs::path& path, const std::vector<std::string>& names) {
  std::string text = qdag::read_text(path);
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::string tok;
  qdag::NodeOrdering ord;
  const int p = static_cast<int>(names.size());
  while (in >> tok) {
    const auto it = std::find(names.begin(), names.end(), tok);
    if (it != names.end()) {
      ord.order.push_back(static_cast<int>(it - names.begin()));
      continue;
    }
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (*end != '\0' || v < 1 || v > p) throw qdag::InputError("ordering entry '" + tok + "' is not a node");
    ord.order.push_back(static_cast<int>(v - 1));
  }
  if (ord.p() != p) throw qdag::InputError("ordering must list all " + std::to_string(p) + " nodes");
  qdag::validate_ordering(ord);
  return ord;
}

json ordering_json(const qdag::NodeOrdering& ord, const std::vector<std::string>& names) {
  json j = json::array();
  for (int v : ord.order) j.push_back(names[static_cast<std::size_t>(v)]);
  return j;
}

void run_fit(FitOptions o, const Invocation& inv) {
  const qdag::SamplerMode mode = qdag::parse_mode(o.mode);
  if (o.taus.empty()) o.taus = {0.5};
  {
    std::set<double> uniq(o.taus.begin(), o.taus.end());
    if (uniq.size() != o.taus.size()) throw qdag::InputError("repeated --tau value");
  }
  if (o.flat && o.taus.size() != 1) throw qdag::InputError("--flat needs exactly one --tau");
  for (double t : o.taus) (void)qdag::QuantileLevel(t);

  InputData in = load_inputs(o);
  const bool zscore = o.zscore_on || (!o.zscore_off && o.bundle.empty());
  if (zscore) zscore_columns(in.x);
  const int p = static_cast<int>(in.y.cols());

  qdag::SamplerConfig base = qdag::SamplerConfig::defaults(mode);
  if (o.iters) base.iters = *o.iters;
  if (o.burnin) base.burnin = *o.burnin;
  else if (o.iters) base.burnin = *o.iters / 2;
  if (o.thin) base.thin = *o.thin;
  base.hyper.a = o.a;
  base.hyper.b = o.b;
  if (o.edge_strength) {
    if (!(*o.edge_strength > 0.0)) throw qdag::InputError("--edge-strength must be positive");
    base.hyper.b = base.hyper.a / *o.edge_strength;
  }

  json cfg;
  cfg["mode"] = qdag::to_string(mode);
  cfg["taus"] = o.taus;
  cfg["zscore"] = zscore;
  cfg["num_basis"] = o.num_basis;
  cfg["seed"] = o.seed;

  if (mode != qdag::SamplerMode::qdagx) {
    qdag::NodeOrdering given;
    if (!o.ordering_file.empty()) {
      given = read_ordering(o.ordering_file, in.names);
    } else if (in.true_ordering) {
      given = *in.true_ordering;
    } else {
      throw qdag::InputError(qdag::to_string(mode) + " mode needs --ordering-file");
    }
    if (mode == qdag::SamplerMode::misspecified) {
      const double target = o.kendall_target.value_or(0.25);
      base.ordering = qdag::misspecify_order(given, target, qdag::derive_seed(o.seed, 0x6b656e64));
      cfg["kendall_target"] = target;
      cfg["kendall_achieved"] = qdag::kendall_tau(given, *base.ordering);
      cfg["base_ordering"] = ordering_json(given, in.names);
    } else {
      if (o.kendall_target) throw qdag::InputError("--kendall-target applies to misspecified mode only");
      base.ordering = given;
    }
    cfg["ordering"] = ordering_json(*base.ordering, in.names);
  } else if (!o.ordering_file.empty() || o.kendall_target) {
    throw qdag::InputError("qdagx mode learns the ordering; drop --ordering-file/--kendall-target");
  }
  base.validate(p);
  cfg["iters"] = base.iters;
  cfg["burnin"] = base.burnin;
  cfg["thin"] = base.thin;
  cfg["hyper"] = {{"a", base.hyper.a}, {"b", base.hyper.b}, {"sigma_m", base.hyper.sigma_m}};

  const int workers = o.workers > 0 ? o.workers : default_workers();
  const int ntau = static_cast<int>(o.taus.size());
  const int tau_workers = std::min(workers, ntau);
  const int node_workers = std::max(1, workers / tau_workers);

  std::vector<fs::path> inputs;
  if (!o.bundle.empty()) inputs.emplace_back(o.bundle);
  else inputs = {o.y, o.x};
  if (!o.ordering_file.empty()) inputs.emplace_back(o.ordering_file);

  const fs::path out(o.out);
  std::string nodes;
  for (const auto& n : in.names) nodes += n + "\n";

  parallel_for(ntau, tau_workers, [&](int k) {
    const double tau = o.taus[static_cast<std::size_t>(k)];
    qdag::SamplerConfig cfg_tau = base;
    // seeded by the tau value so a single-tau rerun reproduces the same chain
    cfg_tau.seed = qdag::derive_seed(o.seed, static_cast<std::uint64_t>(std::llround(tau * 1e9)));
    cfg_tau.workers = node_workers;
    const qdag::PosteriorDraws draws =
        qdag::run_chain(in.y, in.x, qdag::QuantileLevel(tau), cfg_tau, o.num_basis);
    const fs::path dir = o.flat ? out : out / tau_dir_name(tau);
    qdag::write_archive(dir, draws);
    qdag::write_text(dir / "nodes.txt", nodes);
    if (!o.flat) {
      Invocation sub = inv;
      sub.args = without_flag(inv.args, "--tau");
      sub.args = with_flag(sub.args, "--tau", format_double(tau));
      sub.args = with_flag(sub.args, "--out", dir.generic_string());
      sub.args.push_back("--flat");
      json sub_cfg = cfg;
      sub_cfg["taus"] = {tau};
      finish_manifest(dir, sub, sub_cfg.dump(), o.seed, inputs);
    }
  });
  finish_manifest(out, inv, cfg.dump(), o.seed, inputs);
}

// ---------------------------------------------------------------- select

struct SelectOptions {
  std::string fit, bundle, out;
  double fdr = 0.10;
};

void run_select(const SelectOptions& o, const Invocation& inv) {
  if (!(o.fdr > 0.0 && o.fdr < 1.0)) throw qdag::InputError("--fdr must lie in (0, 1)");
  std::optional<qdag::SimTruth> truth;
  if (!o.bundle.empty()) truth = qdag::read_bundle(o.bundle).truth;
  const fs::path out(o.out);
  fs::create_directories(out);
  json report = json::array();
  for (const fs::path& dir : archive_dirs(o.fit)) {
    const qdag::PosteriorDraws d = qdag::read_archive(dir);
    const auto names = node_names(dir, d.p);
    std::optional<qdag::Array3> etruth, ctruth;
    if (truth) {
      const int g = truth->grid_index(d.tau);
      if (g < 0) throw qdag::InputError("archive tau " + format_double(d.tau) + " is not on the truth grid");
      etruth = qdag::edge_truth(*truth, g);
      ctruth = qdag::covariate_truth(*truth);
    }
    const qdag::EdgePosterior ep = qdag::edge_posterior_probs(d);
    const qdag::EdgeSelection es = qdag::select_edges(ep, etruth ? &*etruth : nullptr, o.fdr);
    const qdag::CovariatePosterior cp = qdag::covariate_posterior_probs(d);
    const qdag::CovariateSelection cs = qdag::select_covariates(cp, ctruth ? &*ctruth : nullptr, o.fdr);
    const std::string rule = qdag::to_string(es.rule);

    std::ostringstream edges;
    edges << "i,child,parent,prob,threshold,selected,rule\n";
    for (int i = 0; i < d.n; ++i) {
      for (int h = 0; h < d.p; ++h) {
        for (int j = 0; j < d.p; ++j) {
          if (j == h) continue;
          edges << i + 1 << "," << names[static_cast<std::size_t>(h)] << "," << names[static_cast<std::size_t>(j)]
                << "," << format_double(ep.probs(i, h, j)) << ","
                << format_double(es.thresholds[static_cast<std::size_t>(h)]) << ","
                << static_cast<int>(es.selected(i, h, j)) << "," << rule << "\n";
        }
      }
    }
    std::ostringstream covs;
    covs << "child,parent,covariate,prob,linear,nonlinear,threshold,selected,rule\n";
    for (int h = 0; h < d.p; ++h) {
      for (int j = 0; j < d.p; ++j) {
        if (j == h) continue;
        for (int k = 0; k < d.q(); ++k) {
          covs << names[static_cast<std::size_t>(h)] << "," << names[static_cast<std::size_t>(j)] << ",X"
               << k + 1 << "," << format_double(cp.probs(h, j, k)) << ","
               << format_double(cp.linear(h, j, k)) << "," << format_double(cp.nonlinear(h, j, k)) << ","
               << format_double(cs.thresholds[static_cast<std::size_t>(h)]) << ","
               << static_cast<int>(cs.selected(h, j, k)) << "," << rule << "\n";
        }
      }
    }
    const std::string tag = format_double(d.tau);
    qdag::write_text(out / ("edge_calls_tau_" + tag + ".csv"), edges.str());
    qdag::write_text(out / ("covariate_calls_tau_" + tag + ".csv"), covs.str());
    report.push_back({{"tau", d.tau},
                      {"mode", qdag::to_string(d.mode)},
                      {"rule", rule},
                      {"fdr_target", o.fdr},
                      {"edge_thresholds", es.thresholds},
                      {"edge_fdr", es.achieved_fdr},
                      {"covariate_thresholds", cs.thresholds},
                      {"covariate_fdr", cs.achieved_fdr}});
  }
  qdag::write_text(out / "selection.json", report.dump(2) + "\n");
  std::vector<fs::path> inputs{o.fit};
  if (!o.bundle.empty()) inputs.emplace_back(o.bundle);
  finish_manifest(out, inv, json{{"fdr", o.fdr}}.dump(), 0, inputs);
}

// ---------------------------------------------------------------- metrics

struct MetricsOptions {
  std::string fit, bundle, out, replicate = "1";
  double fdr = 0.10;
  bool self = false;
  std::vector<double> taus;
};

void run_metrics(const MetricsOptions& o, const Invocation& inv) {
  if (o.bundle.empty()) throw qdag::InputError("--bundle is required (metrics compare against simulation truth)");
  if (!(o.fdr > 0.0 && o.fdr < 1.0)) throw qdag::InputError("--fdr must lie in (0, 1)");
  const qdag::SimDataset ds = qdag::read_bundle(o.bundle);
  std::vector<qdag::MetricReport> reports;
  if (o.self) {
    if (!o.fit.empty()) throw qdag::InputError("--self compares the bundle with itself; drop --fit");
    const std::vector<double> taus = o.taus.empty() ? ds.truth.tau_grid : o.taus;
    for (double t : taus) reports.push_back(qdag::evaluate_truth(ds.truth, t, o.fdr));
  } else {
    if (o.fit.empty()) throw qdag::InputError("--fit is required unless --self is given");
    for (const fs::path& dir : archive_dirs(o.fit)) {
      reports.push_back(qdag::evaluate(qdag::read_archive(dir), ds.truth, ds.y, o.fdr));
    }
  }
  std::ostringstream csv;
  csv << "replicate,tau,mode,metric,value\n";
  const auto names = qdag::MetricReport::names();
  for (const auto& r : reports) {
    const auto vals = r.values();
    for (std::size_t m = 0; m < names.size(); ++m) {
      csv << o.replicate << "," << format_double(r.tau) << "," << r.mode << "," << names[m] << ","
          << format_double(vals[m]) << "\n";
    }
  }
  const fs::path out(o.out);
  qdag::write_text(out / "metrics.csv", csv.str());
  std::vector<fs::path> inputs{o.bundle};
  if (!o.fit.empty()) inputs.emplace_back(o.fit);
  finish_manifest(out, inv, json{{"fdr", o.fdr}, {"replicate", o.replicate}, {"self", o.self}}.dump(), 0,
                  inputs);
}

// ---------------------------------------------------------------- plotdata

struct PlotdataOptions {
  std::vector<std::string> metrics;
  std::string out;
};

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

void run_plotdata(const PlotdataOptions& o, const Invocation& inv) {
  std::vector<fs::path> files;
  for (const auto& m : o.metrics) {
    if (fs::is_directory(m)) {
      for (const auto& e : fs::recursive_directory_iterator(m)) {
        if (e.is_regular_file() && e.path().filename() == "metrics.csv") files.push_back(e.path());
      }
    } else {
      files.emplace_back(m);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw qdag::InputError("no metrics.csv files given");

  // (tau, mode, metric) -> values over replicates; metric order follows the nine-panel layout
  const auto metric_names = qdag::MetricReport::names();
  auto metric_rank = [&](const std::string& m) {
    return static_cast<int>(std::find(metric_names.begin(), metric_names.end(), m) - metric_names.begin());
  };
  // unknown metric names sort after the known ones and keep their own rows
  std::map<std::tuple<int, std::string, std::string, double>, std::vector<double>> groups;
  for (const auto& f : files) {
    std::istringstream in(qdag::read_text(f));
    std::string line;
    std::getline(in, line);
    if (line != "replicate,tau,mode,metric,value") throw qdag::InputError(f.string() + " is not a metrics table");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto c = split_row(line);
      if (c.size() != 5) throw qdag::InputError(f.string() + ": malformed row");
      groups[{metric_rank(c[3]), c[3], c[2], std::stod(c[1])}].push_back(std::stod(c[4]));
    }
  }
  std::ostringstream csv;
  csv << "metric,mode,tau,mean,sd,n\n";
  for (const auto& [key, vals] : groups) {
    const auto& [rank, name, mode, tau] = key;
    const double n = static_cast<double>(vals.size());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= n;
    std::string sd = "NA";
    if (vals.size() > 1) {
      double ss = 0.0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      sd = format_double(std::sqrt(ss / (n - 1.0)));
    }
    csv << name << "," << mode << "," << format_double(tau) << "," << format_double(mean) << "," << sd << ","
        << vals.size() << "\n";
  }
  const fs::path out(o.out);
  qdag::write_text(out / "plotdata.csv", csv.str());
  finish_manifest(out, inv, json{{"files", files.size()}}.dump(), 0, files);
}

// ---------------------------------------------------------------- aggregate

struct AggregateOptions {
  std::string fit, groups, out;
  double patient_frac = 0.5;
  int min_quantiles = 5;
  int top_k = 3;
  int hub_quantiles = 4;
};

void run_aggregate(const AggregateOptions& o, const Invocation& inv) {
  const fs::path out(o.out);
  fs::create_directories(out);
  std::vector<qdag::AggregatedDag> aggs;
  std::vector<std::vector<qdag::Adjacency>> reps_per_tau;
  std::vector<std::string> names;
  json taus = json::array();
  for (const fs::path& dir : archive_dirs(o.fit)) {
    const qdag::PosteriorDraws d = qdag::read_archive(dir);
    if (names.empty()) names = node_names(dir, d.p);
    if (static_cast<int>(names.size()) != d.p) throw qdag::DimensionError("archives disagree on the node count");
    reps_per_tau.push_back(qdag::representatives(d));
    aggs.push_back(qdag::aggregate_dags(reps_per_tau.back(), d.tau));
    qdag::Table t;
    t.header = names;
    t.ids = names;
    t.values = aggs.back().weights;
    qdag::write_csv_table(out / ("aggregate_tau_" + format_double(d.tau) + ".csv"), t);
    taus.push_back(d.tau);
  }

  std::map<std::string, std::string> group_of;
  if (!o.groups.empty()) {
    std::istringstream in(qdag::read_text(o.groups));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      const auto c = split_row(line);
      if (c.size() >= 2) group_of[c[0]] = c[1];
    }
  }
  auto node_json = [&](int v) {
    json j = {{"node", names[static_cast<std::size_t>(v)]}};
    if (auto it = group_of.find(names[static_cast<std::size_t>(v)]); it != group_of.end()) j["group"] = it->second;
    return j;
  };
  auto hubs = [&](qdag::Degree deg) {
    json arr = json::array();
    for (const auto& h : qdag::hub_rank(aggs, deg, o.top_k, o.hub_quantiles)) {
      json j = node_json(h.node);
      j["appearances"] = h.appearances;
      j["degree_sum"] = h.degree_sum;
      arr.push_back(j);
    }
    return arr;
  };
  json prevalent = json::array();
  for (const auto& e : qdag::edge_prevalence(reps_per_tau, o.patient_frac, o.min_quantiles)) {
    prevalent.push_back({{"child", names[static_cast<std::size_t>(e.child)]},
                         {"parent", names[static_cast<std::size_t>(e.parent)]},
                         {"quantiles", e.quantiles},
                         {"prevalence", e.prevalence}});
  }
  json report = {{"taus", taus},
                 {"hubs_in", hubs(qdag::Degree::in)},
                 {"hubs_out", hubs(qdag::Degree::out)},
                 {"prevalent_edges", prevalent},
                 {"settings",
                  {{"patient_frac", o.patient_frac},
                   {"min_quantiles", o.min_quantiles},
                   {"top_k", o.top_k},
                   {"hub_quantiles", o.hub_quantiles}}}};
  qdag::write_text(out / "report.json", report.dump(2) + "\n");
  std::vector<fs::path> inputs{o.fit};
  if (!o.groups.empty()) inputs.emplace_back(o.groups);
  finish_manifest(out, inv, report["settings"].dump(), 0, inputs);
}

// ---------------------------------------------------------------- replay

struct ReplayOptions {
  std::string manifest, out;
};

int run_replay(const ReplayOptions& o) {
  const qdag::RunManifest m = qdag::read_manifest(o.manifest);
  if (m.command == "replay") throw qdag::InputError("cannot replay a replay");
  const json cfg = json::parse(m.config_json);
  const fs::path out = fs::absolute(o.out);
  const fs::path here = fs::current_path();
  const fs::path cwd = cfg.value("cwd", here.generic_string());

  fs::current_path(cwd);
  std::map<std::string, std::string> now;
  try {
    for (const auto& [path, hash] : m.inputs) {
      if (!fs::exists(path)) throw qdag::InputError("recorded input " + path + " is missing");
      if (qdag::hash_file(path) != hash) throw qdag::InputError("recorded input " + path + " has changed");
    }
    std::vector<std::string> args{m.command};
    const auto rest = with_flag(m.args, "--out", out.generic_string());
    args.insert(args.end(), rest.begin(), rest.end());
    const int rc = run_cli(args);
    fs::current_path(here);
    if (rc != kOk) return rc;
  } catch (...) {
    fs::current_path(here);
    throw;
  }
  now = qdag::hash_outputs(out);

  json diff = json::array();
  std::set<std::string> keys;
  for (const auto& [k, v] : m.outputs) keys.insert(k);
  for (const auto& [k, v] : now) keys.insert(k);
  for (const auto& k : keys) {
    const auto a = m.outputs.find(k);
    const auto b = now.find(k);
    if (a == m.outputs.end() || b == now.end() || a->second != b->second) diff.push_back(k);
  }
  const bool same = diff.empty();
  std::cout << json{{"identical", same}, {"files", keys.size()}, {"mismatched", diff}}.dump() << "\n";
  return same ? kOk : kMismatch;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"qdagx: covariate-dependent quantile DAG estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qdag::library_version());

  Invocation inv;
  inv.started = qdag::utc_timestamp();
  if (!args.empty()) {
    inv.command = args.front();
    inv.args.assign(args.begin() + 1, args.end());
  }
  std::function<int()> action;

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Generate synthetic dataset bundles");
  s->add_option("--p", sim.p, "Number of nodes")->capture_default_str();
  s->add_option("--q", sim.q, "Number of covariates")->capture_default_str();
  s->add_option("--n", sim.n, "Number of individuals")->capture_default_str();
  s->add_option("--replicates", sim.replicates, "Number of replicate datasets")->capture_default_str();
  s->add_option("--replicate", sim.replicate, "Write only this replicate (1-based) into --out");
  s->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
  s->add_option("--threshold", sim.threshold, "Edge threshold (default 0.5 for q <= 2, else 1)");
  s->add_option("--out", sim.out, "Output directory")->required();
  s->callback([&] { action = [&] { run_simulate(sim, inv); return 0; }; });

  FitOptions fit;
  auto* f = app.add_subcommand("fit", "Run the MCMC sampler and write draw archives");
  f->add_option("--y", fit.y, "Response CSV (id column first)");
  f->add_option("--x", fit.x, "Covariate CSV (id column first)");
  f->add_option("--bundle", fit.bundle, "Simulation bundle directory (instead of --y/--x)");
  f->add_option("--tau", fit.taus, "Quantile level; repeat for several (default 0.5)");
  f->add_option("--mode", fit.mode, "oracle, qdagx or misspecified")
      ->check(CLI::IsMember({"oracle", "qdagx", "misspecified"}))
      ->capture_default_str();
  f->add_option("--ordering-file", fit.ordering_file, "Node ordering, children before parents");
  f->add_option("--kendall-target", fit.kendall_target, "Kendall tau of the misspecified ordering (default 0.25)");
  f->add_option("--iters", fit.iters, "Total iterations (mode default when omitted)");
  f->add_option("--burnin", fit.burnin, "Burn-in iterations");
  f->add_option("--thin", fit.thin, "Thinning interval");
  f->add_option("--seed", fit.seed, "Seed")->capture_default_str();
  f->add_option("--num-basis", fit.num_basis, "B-spline basis size per covariate")->capture_default_str();
  auto* zon = f->add_flag("--zscore", fit.zscore_on, "Standardize covariates (default for CSV input)");
  f->add_flag("--no-zscore", fit.zscore_off, "Keep covariates as given (default for bundles)")->excludes(zon);
  f->add_option("--a", fit.a, "Threshold prior shape")->capture_default_str();
  f->add_option("--b", fit.b, "Threshold prior rate")->capture_default_str();
  f->add_option("--edge-strength", fit.edge_strength, "Expected edge strength; sets the rate to a / strength");
  f->add_option("--workers", fit.workers, "Worker threads (default QDAGX_WORKERS or all cores)");
  f->add_flag("--flat", fit.flat, "With one --tau, write the archive directly into --out");
  f->add_option("--out", fit.out, "Output directory")->required();
  f->callback([&] { action = [&] { run_fit(fit, inv); return 0; }; });

  SelectOptions sel;
  auto* se = app.add_subcommand("select", "FDR-controlled edge and covariate calls");
  se->add_option("--fit", sel.fit, "Fit output or archive directory")->required();
  se->add_option("--bundle", sel.bundle, "Simulation bundle: use truth-based FDR");
  se->add_option("--fdr", sel.fdr, "FDR target")->capture_default_str();
  se->add_option("--out", sel.out, "Output directory")->required();
  se->callback([&] { action = [&] { run_select(sel, inv); return 0; }; });

  MetricsOptions met;
  auto* me = app.add_subcommand("metrics", "Performance metrics against simulation truth");
  me->add_option("--fit", met.fit, "Fit output or archive directory");
  me->add_option("--bundle", met.bundle, "Simulation bundle directory")->required();
  me->add_flag("--self", met.self, "Score the truth against itself");
  me->add_option("--tau", met.taus, "Quantile levels for --self (default: the whole grid)");
  me->add_option("--fdr", met.fdr, "FDR target")->capture_default_str();
  me->add_option("--replicate", met.replicate, "Replicate label for the table")->capture_default_str();
  me->add_option("--out", met.out, "Output directory")->required();
  me->callback([&] { action = [&] { run_metrics(met, inv); return 0; }; });

  PlotdataOptions pd;
  auto* pl = app.add_subcommand("plotdata", "Mean and sd of metrics over replicates, tidy CSV");
  pl->add_option("--metrics", pd.metrics, "metrics.csv files or directories to search")->required();
  pl->add_option("--out", pd.out, "Output directory")->required();
  pl->callback([&] { action = [&] { run_plotdata(pd, inv); return 0; }; });

  AggregateOptions ag;
  auto* a = app.add_subcommand("aggregate", "Aggregated quantile DAGs, hubs and prevalent edges");
  a->add_option("--fit", ag.fit, "Fit output directory with one archive per tau")->required();
  a->add_option("--groups", ag.groups, "Optional CSV node,group for annotation");
  a->add_option("--patient-frac", ag.patient_frac, "Prevalence cutoff")->capture_default_str();
  a->add_option("--min-quantiles", ag.min_quantiles, "Quantile count for prevalent edges")->capture_default_str();
  a->add_option("--top-k", ag.top_k, "Hub rank cutoff")->capture_default_str();
  a->add_option("--hub-quantiles", ag.hub_quantiles, "Quantile count for hubs")->capture_default_str();
  a->add_option("--out", ag.out, "Output directory")->required();
  a->callback([&] { action = [&] { run_aggregate(ag, inv); return 0; }; });

  ReplayOptions rp;
  auto* r = app.add_subcommand("replay", "Re-run a recorded command and compare output hashes");
  r->add_option("--manifest", rp.manifest, "Directory holding run_manifest.json (or the file)")->required();
  r->add_option("--out", rp.out, "Fresh output directory")->required();
  r->callback([&] { action = [&] { return run_replay(rp); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << qdag::library_version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json("usage", e.what()) << "\n";
    return kUsage;
  }

  try {
    return action ? action() : kUsage;
  } catch (const qdag::Error& e) {
    std::cerr << error_json(e.kind(), e.what()) << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << error_json("io", e.what()) << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what()) << "\n";
    return kFailure;
  }
}

}  // namespace qdagx
