#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qdag/sampler.hpp"
#include "qdag/simdata.hpp"

namespace qdag {

namespace fs = std::filesystem;

/// Numeric CSV with a header row and an optional leading id column.
struct Table {
  std::vector<std::string> header;  // value columns only
  std::vector<std::string> ids;     // empty when there is no id column
  Eigen::MatrixXd values;
};

Table read_csv_table(const fs::path& path, bool id_column);
void write_csv_table(const fs::path& path, const Table& table);
/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hash_file(const fs::path& path);
std::string hex64(std::uint64_t v);
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Draw archive directory:
///   archive.json  tau, mode, seed, schedule, hyperparameters, dimensions,
///                 edge list, ordering, acceptance rates, iteration/loglik per draw
///   draws.bin     little-endian float64; for each draw, for each edge, the record
///                 [mu, t, T2_nl, c_nl, T2_lin, c_lin,
///                  per covariate k: eta, L2, zeta, xi[B*_k], m[B*_k]  (nonlinear)
///                  per covariate k: eta, L2, zeta, xi, m              (linear)]
///   design.bin    little-endian float64: X (n x q, column-major), then each
///                 reduced spline design (n x B*_k, column-major)
void write_archive(const fs::path& dir, const PosteriorDraws& draws);
PosteriorDraws read_archive(const fs::path& dir);
std::size_t edge_record_length(const std::vector<int>& reduced_dims);

/// Simulated dataset bundle:
///   Y.csv, X.csv          id column plus Y1..Yp / X1..Xq
///   dag.csv               adjacency (row = child, column = parent)
///   forms.csv             per coefficient: child, parent (0 = intercept), q_star, covariates
///   truth/tau_0.x.csv     long format i,h,j,theta,beta (j = 0 for intercepts)
///   truth/quantile_0.x.csv  n x p true conditional quantiles
///   bundle.json           settings and threshold
void write_bundle(const fs::path& dir, const SimDataset& ds, const SimSettings& settings);
SimDataset read_bundle(const fs::path& dir);
bool is_bundle(const fs::path& dir);

/// Reproducibility record written into every output directory.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;       // full argument vector after the subcommand
  std::string config_json;             // resolved configuration snapshot
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // path -> hash
  std::map<std::string, std::string> outputs;  // relative path -> hash
  std::string version;
  std::string started;
  std::string finished;
};

void write_manifest(const fs::path& dir, const RunManifest& m);
RunManifest read_manifest(const fs::path& dir);
/// Hashes of every regular file below dir except the manifest itself.
std::map<std::string, std::string> hash_outputs(const fs::path& dir);
std::string utc_timestamp();
std::string library_version();

}  // namespace qdag
