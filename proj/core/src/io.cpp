#include "qdag/io.hpp"

#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qdag/error.hpp"

#ifndef QDAGX_VERSION
#define QDAGX_VERSION "0.0.0"
#endif

namespace qdag {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    throw InputError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  if (!std::isfinite(v)) {
    throw InputError(path.string() + ":" + std::to_string(line) + ": non-finite value");
  }
  return v;
}

static_assert(std::endian::native == std::endian::little,
              "binary archives are written in native little-endian order");

void write_doubles(std::ofstream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

class DoubleReader {
 public:
  explicit DoubleReader(const fs::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % sizeof(double) != 0) throw IoError(path.string() + ": truncated file");
    values_.resize(bytes.size() / sizeof(double));
    std::memcpy(values_.data(), bytes.data(), bytes.size());
  }
  double next() {
    if (pos_ >= values_.size()) throw IoError(path_.string() + ": unexpected end of data");
    return values_[pos_++];
  }
  bool done() const { return pos_ == values_.size(); }

 private:
  fs::path path_;
  std::vector<double> values_;
  std::size_t pos_ = 0;
};

json config_to_json(const SamplerConfig& c) {
  json j;
  j["iters"] = c.iters;
  j["burnin"] = c.burnin;
  j["thin"] = c.thin;
  j["step_eta"] = c.step_eta;
  j["step_xi"] = c.step_xi;
  j["step_mu"] = c.step_mu;
  j["step_t_base"] = c.step_t_base;
  j["step_t_z_range"] = {c.step_t_z_min, c.step_t_z_max};
  j["adapt_window"] = c.adapt_window;
  j["adapt_all_steps"] = c.adapt_all_steps;
  j["step_z_range"] = {c.step_z_min, c.step_z_max};
  j["anneal_fraction"] = c.anneal_fraction;
  j["anneal_start"] = c.anneal_start;
  j["seed"] = c.seed;
  j["mode"] = to_string(c.mode);
  j["threshold_intercept"] = c.threshold_intercept;
  j["hyper"] = {{"sigma_m", c.hyper.sigma_m},
                {"sigma_mu", c.hyper.sigma_mu},
                {"sigma_mu_intercept", c.hyper.sigma_mu_intercept},
                {"a", c.hyper.a},
                {"b", c.hyper.b}};
  return j;
}

SamplerConfig config_from_json(const json& j) {
  SamplerConfig c;
  c.iters = j.at("iters");
  c.burnin = j.at("burnin");
  c.thin = j.at("thin");
  c.step_eta = j.at("step_eta");
  c.step_xi = j.at("step_xi");
  c.step_mu = j.at("step_mu");
  c.step_t_base = j.at("step_t_base");
  c.step_t_z_min = j.at("step_t_z_range").at(0);
  c.step_t_z_max = j.at("step_t_z_range").at(1);
  c.adapt_window = j.at("adapt_window");
  c.adapt_all_steps = j.at("adapt_all_steps");
  c.step_z_min = j.at("step_z_range").at(0);
  c.step_z_max = j.at("step_z_range").at(1);
  c.anneal_fraction = j.at("anneal_fraction");
  c.anneal_start = j.at("anneal_start");
  c.seed = j.at("seed");
  c.mode = parse_mode(j.at("mode"));
  c.threshold_intercept = j.at("threshold_intercept");
  const json& h = j.at("hyper");
  c.hyper.sigma_m = h.at("sigma_m");
  c.hyper.sigma_mu = h.at("sigma_mu");
  c.hyper.sigma_mu_intercept = h.at("sigma_mu_intercept");
  c.hyper.a = h.at("a");
  c.hyper.b = h.at("b");
  return c;
}

void append_group(std::vector<double>& rec, const PxhsBlock& blk) {
  rec.push_back(blk.eta);
  rec.push_back(blk.L2);
  rec.push_back(blk.zeta);
  for (int l = 0; l < blk.dim(); ++l) rec.push_back(blk.xi[l]);
  for (int l = 0; l < blk.dim(); ++l) rec.push_back(blk.m[l]);
}

void read_group(DoubleReader& r, PxhsBlock& blk) {
  blk.eta = r.next();
  blk.L2 = r.next();
  blk.zeta = r.next();
  for (int l = 0; l < blk.dim(); ++l) blk.xi[l] = r.next();
  for (int l = 0; l < blk.dim(); ++l) blk.m[l] = r.next();
}

std::string tau_tag(double tau) {
  std::ostringstream os;
  os.precision(1);
  os << std::fixed << tau;
  return os.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, ptr);
}

Table read_csv_table(const fs::path& path, bool id_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  auto head = split_csv_line(line);
  if (id_column) {
    if (head.size() < 2) throw InputError(path.string() + ": expected an id column and values");
    head.erase(head.begin());
  }
  t.header = head;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (id_column) {
      t.ids.push_back(cells.front());
      cells.erase(cells.begin());
    }
    if (cells.size() != t.header.size()) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " values, found " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, path, lineno));
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return t;
}

void write_csv_table(const fs::path& path, const Table& t) {
  if (t.values.cols() != static_cast<Eigen::Index>(t.header.size())) {
    throw DimensionError("header does not match the number of columns");
  }
  const bool ids = !t.ids.empty();
  if (ids && t.ids.size() != static_cast<std::size_t>(t.values.rows())) {
    throw DimensionError("id count does not match the number of rows");
  }
  std::ostringstream os;
  if (ids) os << "id";
  for (std::size_t j = 0; j < t.header.size(); ++j) os << ((ids || j) ? "," : "") << t.header[j];
  os << "\n";
  for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
    if (ids) os << t.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < t.values.cols(); ++j) {
      os << ((ids || j) ? "," : "") << format_double(t.values(i, j));
    }
    os << "\n";
  }
  write_text(path, os.str());
}

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string hash_file(const fs::path& path) { return hex64(fnv1a64(read_text(path))); }

std::size_t edge_record_length(const std::vector<int>& dims) {
  std::size_t len = 6;
  for (int d : dims) len += 3 + 2 * static_cast<std::size_t>(d) + 5;
  return len;
}

void write_archive(const fs::path& dir, const PosteriorDraws& d) {
  fs::create_directories(dir);
  const auto dims = d.design.reduced_dims();
  json j;
  j["format"] = "qdagx-archive-1";
  j["tau"] = d.tau;
  j["mode"] = to_string(d.mode);
  j["seed"] = d.config.seed;
  j["config"] = config_to_json(d.config);
  j["n"] = d.n;
  j["p"] = d.p;
  j["q"] = d.q();
  j["reduced_dims"] = dims;
  j["num_basis"] = d.design.bases.empty() ? 0 : d.design.bases.front().design_raw.cols();
  j["threshold_intercept"] = d.threshold_intercept;
  j["ordering"] = d.ordering.order;
  json edges = json::array();
  for (const auto& e : d.edges) edges.push_back({e.child, e.parent});
  j["edges"] = edges;
  json acc;
  for (int f = 0; f < kFamilyCount; ++f) {
    const auto fam = static_cast<Family>(f);
    acc[to_string(fam)] = {{"proposed", d.acceptance.proposed[static_cast<std::size_t>(f)]},
                           {"accepted", d.acceptance.accepted[static_cast<std::size_t>(f)]},
                           {"rate", d.acceptance.rate(fam)}};
  }
  j["acceptance"] = acc;
  j["draw_count"] = d.draws.size();
  j["record_length"] = edge_record_length(dims);
  std::vector<long> iters;
  std::vector<double> ll;
  for (const auto& dr : d.draws) {
    iters.push_back(dr.iteration);
    ll.push_back(dr.loglik);
  }
  j["iterations"] = iters;
  j["loglik"] = ll;
  write_text(dir / "archive.json", j.dump(2) + "\n");

  {
    std::ofstream out(dir / "draws.bin", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "draws.bin").string());
    std::vector<double> rec;
    for (const auto& dr : d.draws) {
      for (const auto& b : dr.edges) {
        rec.clear();
        rec.insert(rec.end(), {b.mu, b.threshold, b.nonlinear.T2, b.nonlinear.c, b.linear.T2,
                               b.linear.c});
        for (const auto& blk : b.nonlinear.blocks) append_group(rec, blk);
        for (const auto& blk : b.linear.blocks) append_group(rec, blk);
        write_doubles(out, rec.data(), rec.size());
      }
    }
  }
  {
    std::ofstream out(dir / "design.bin", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "design.bin").string());
    write_doubles(out, d.design.covariates.data(), static_cast<std::size_t>(d.design.covariates.size()));
    for (const auto& b : d.design.bases) {
      write_doubles(out, b.design_reduced.data(), static_cast<std::size_t>(b.design_reduced.size()));
    }
  }
}

PosteriorDraws read_archive(const fs::path& dir) {
  if (!fs::exists(dir / "archive.json")) throw IoError(dir.string() + " is not a draw archive");
  const json j = json::parse(read_text(dir / "archive.json"));
  if (j.value("format", "") != "qdagx-archive-1") throw IoError("unsupported archive format");
  PosteriorDraws d;
  d.tau = j.at("tau");
  d.mode = parse_mode(j.at("mode"));
  d.config = config_from_json(j.at("config"));
  d.n = j.at("n");
  d.p = j.at("p");
  const int q = j.at("q");
  const std::vector<int> dims = j.at("reduced_dims");
  const int num_basis = j.value("num_basis", 0);
  d.threshold_intercept = j.at("threshold_intercept");
  d.ordering.order = j.at("ordering").get<std::vector<int>>();
  if (d.mode != SamplerMode::qdagx) d.config.ordering = d.ordering;
  for (const auto& e : j.at("edges")) d.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  for (int f = 0; f < kFamilyCount; ++f) {
    const json& a = j.at("acceptance").at(to_string(static_cast<Family>(f)));
    d.acceptance.proposed[static_cast<std::size_t>(f)] = a.at("proposed");
    d.acceptance.accepted[static_cast<std::size_t>(f)] = a.at("accepted");
  }
  const std::vector<long> iters = j.at("iterations");
  const std::vector<double> ll = j.at("loglik");

  DoubleReader design(dir / "design.bin");
  d.design.covariates.resize(d.n, q);
  for (Eigen::Index i = 0; i < d.design.covariates.size(); ++i) d.design.covariates.data()[i] = design.next();
  for (int k = 0; k < q; ++k) {
    SplineBasis b;
    b.covariate_index = k;
    b.reduced_dim = dims[static_cast<std::size_t>(k)];
    b.design_reduced.resize(d.n, b.reduced_dim);
    for (Eigen::Index i = 0; i < b.design_reduced.size(); ++i) b.design_reduced.data()[i] = design.next();
    if (num_basis > 0) {
      // the raw basis is a deterministic function of the stored covariate column
      const Eigen::VectorXd x = d.design.covariates.col(k);
      const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
      b.knots = equally_spaced_knots(xs, num_basis, kDefaultDegree);
      b.design_raw = bspline_design_on_knots(xs, b.knots, kDefaultDegree);
    }
    d.design.bases.push_back(std::move(b));
  }
  if (!design.done()) throw IoError("design.bin has trailing data");

  DoubleReader draws(dir / "draws.bin");
  const EdgeParamBlock shape = make_edge_block(dims);
  d.draws.resize(iters.size());
  for (std::size_t k = 0; k < iters.size(); ++k) {
    QuantileDagDraw& dr = d.draws[k];
    dr.iteration = iters[k];
    dr.loglik = ll.at(k);
    dr.edges.assign(d.edges.size(), shape);
    for (auto& b : dr.edges) {
      b.mu = draws.next();
      b.threshold = draws.next();
      b.nonlinear.T2 = draws.next();
      b.nonlinear.c = draws.next();
      b.linear.T2 = draws.next();
      b.linear.c = draws.next();
      for (auto& blk : b.nonlinear.blocks) read_group(draws, blk);
      for (auto& blk : b.linear.blocks) read_group(draws, blk);
    }
  }
  if (!draws.done()) throw IoError("draws.bin has trailing data");
  return d;
}

bool is_bundle(const fs::path& dir) { return fs::exists(dir / "bundle.json"); }

void write_bundle(const fs::path& dir, const SimDataset& ds, const SimSettings& s) {
  fs::create_directories(dir / "truth");
  const SimTruth& t = ds.truth;
  Table y, x;
  for (int h = 0; h < t.p; ++h) y.header.push_back("Y" + std::to_string(h + 1));
  for (int k = 0; k < t.q; ++k) x.header.push_back("X" + std::to_string(k + 1));
  for (int i = 0; i < t.n; ++i) {
    y.ids.push_back(std::to_string(i + 1));
    x.ids.push_back(std::to_string(i + 1));
  }
  y.values = ds.y;
  x.values = ds.x;
  write_csv_table(dir / "Y.csv", y);
  write_csv_table(dir / "X.csv", x);
  write_text(dir / "dag.csv", adjacency_to_csv(t.dag(), y.header));

  std::ostringstream forms;
  forms << "child,parent,q_star,covariates\n";
  auto put = [&](int h, int j, const ThetaForm& f) {
    forms << h + 1 << "," << j << "," << f.q_star << ",";
    for (std::size_t c = 0; c < f.chosen.size(); ++c) forms << (c ? ";" : "") << f.chosen[c] + 1;
    forms << "\n";
  };
  for (int h = 0; h < t.p; ++h) {
    put(h, 0, t.intercept_forms[static_cast<std::size_t>(h)]);
    for (int j : t.parents[static_cast<std::size_t>(h)]) put(h, j + 1, t.edge_form(h, j));
  }
  write_text(dir / "forms.csv", forms.str());

  for (std::size_t g = 0; g < t.tau_grid.size(); ++g) {
    std::ostringstream os;
    os << "i,h,j,theta,beta\n";
    for (int i = 0; i < t.n; ++i) {
      for (int h = 0; h < t.p; ++h) {
        os << i + 1 << "," << h + 1 << ",0," << format_double(t.theta0[g](i, h)) << ","
           << format_double(t.beta0[g](i, h)) << "\n";
        for (int j : t.parents[static_cast<std::size_t>(h)]) {
          os << i + 1 << "," << h + 1 << "," << j + 1 << "," << format_double(t.theta[g](i, h, j))
             << "," << format_double(t.beta[g](i, h, j)) << "\n";
        }
      }
    }
    const std::string tag = tau_tag(t.tau_grid[g]);
    write_text(dir / "truth" / ("tau_" + tag + ".csv"), os.str());
    Table qt;
    qt.header = y.header;
    qt.ids = y.ids;
    qt.values = t.quantile[g];
    write_csv_table(dir / "truth" / ("quantile_" + tag + ".csv"), qt);
  }
  Table taus;
  taus.header = y.header;
  taus.ids = y.ids;
  taus.values = t.tau_draws;
  write_csv_table(dir / "truth" / "latent_tau.csv", taus);

  json j;
  j["format"] = "qdagx-bundle-1";
  j["n"] = t.n;
  j["p"] = t.p;
  j["q"] = t.q;
  j["seed"] = s.seed;
  j["threshold"] = t.threshold;
  j["tau_grid"] = t.tau_grid;
  j["edges"] = t.dag().edge_count();
  write_text(dir / "bundle.json", j.dump(2) + "\n");
}

SimDataset read_bundle(const fs::path& dir) {
  if (!is_bundle(dir)) throw IoError(dir.string() + " is not a simulation bundle");
  const json j = json::parse(read_text(dir / "bundle.json"));
  SimDataset ds;
  ds.y = read_csv_table(dir / "Y.csv", true).values;
  ds.x = read_csv_table(dir / "X.csv", true).values;
  SimTruth& t = ds.truth;
  t.n = j.at("n");
  t.p = j.at("p");
  t.q = j.at("q");
  t.threshold = j.at("threshold");
  t.tau_grid = j.at("tau_grid").get<std::vector<double>>();
  if (ds.y.rows() != t.n || ds.y.cols() != t.p || ds.x.cols() != t.q) {
    throw DimensionError("bundle files do not match bundle.json");
  }
  t.parents.assign(static_cast<std::size_t>(t.p), {});
  t.intercept_forms.assign(static_cast<std::size_t>(t.p), {});
  t.edge_forms.assign(static_cast<std::size_t>(t.p) * t.p, {});
  std::istringstream forms(read_text(dir / "forms.csv"));
  std::string line;
  std::getline(forms, line);
  while (std::getline(forms, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4) throw InputError("forms.csv: malformed row");
    const int h = std::stoi(cells[0]) - 1;
    const int j1 = std::stoi(cells[1]);
    ThetaForm f;
    f.q_star = std::stoi(cells[2]);
    std::istringstream cov(cells[3]);
    std::string c;
    while (std::getline(cov, c, ';')) {
      if (!c.empty()) f.chosen.push_back(std::stoi(c) - 1);
    }
    if (j1 == 0) {
      t.intercept_forms.at(static_cast<std::size_t>(h)) = f;
    } else {
      t.parents.at(static_cast<std::size_t>(h)).push_back(j1 - 1);
      t.edge_forms.at(static_cast<std::size_t>(h) * t.p + (j1 - 1)) = f;
    }
  }
  t.tau_draws = read_csv_table(dir / "truth" / "latent_tau.csv", true).values;
  truth_on_grid(t, ds.x, ds.y);
  return ds;
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["args"] = m.args;
  j["config"] = m.config_json.empty() ? json::object() : json::parse(m.config_json);
  j["seed"] = m.seed;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["version"] = m.version;
  j["started"] = m.started;
  j["finished"] = m.finished;
  write_text(dir / "run_manifest.json", j.dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& dir) {
  const fs::path path = fs::is_directory(dir) ? dir / "run_manifest.json" : dir;
  const json j = json::parse(read_text(path));
  RunManifest m;
  m.command = j.at("command");
  m.args = j.at("args").get<std::vector<std::string>>();
  m.config_json = j.at("config").dump();
  m.seed = j.at("seed");
  m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  m.version = j.at("version");
  m.started = j.value("started", "");
  m.finished = j.value("finished", "");
  return m;
}

std::map<std::string, std::string> hash_outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "run_manifest.json") continue;
    out[fs::relative(entry.path(), dir).generic_string()] = hash_file(entry.path());
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string library_version() { return QDAGX_VERSION; }

}  // namespace qdag
