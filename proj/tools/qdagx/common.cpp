#include "common.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace qdagx {

std::string error_json(const std::string& kind, const std::string& message) {
  return nlohmann::json{{"error", kind}, {"message", message}}.dump();
}

int default_workers() {
  if (const char* env = std::getenv("QDAGX_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::clamp(workers, 1, std::max(1, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex mu;
  int next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      int i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= count || failure) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void hash_input(const fs::path& path, std::map<std::string, std::string>& into) {
  if (fs::is_directory(path)) {
    for (const auto& [rel, h] : qdag::hash_outputs(path)) into[(path / rel).generic_string()] = h;
  } else {
    into[path.generic_string()] = qdag::hash_file(path);
  }
}

void finish_manifest(const fs::path& dir, const Invocation& inv, const std::string& config_json,
                     std::uint64_t seed, const std::vector<fs::path>& inputs) {
  qdag::RunManifest m;
  m.command = inv.command;
  m.args = inv.args;
  auto cfg = config_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(config_json);
  cfg["cwd"] = fs::current_path().generic_string();
  m.config_json = cfg.dump();
  m.seed = seed;
  for (const auto& in : inputs) hash_input(in, m.inputs);
  m.outputs = qdag::hash_outputs(dir);
  m.version = qdag::library_version();
  m.started = inv.started;
  m.finished = qdag::utc_timestamp();
  qdag::write_manifest(dir, m);
}

std::vector<std::string> with_flag(std::vector<std::string> args, const std::string& flag,
                                   const std::string& value) {
  args = without_flag(std::move(args), flag);
  args.push_back(flag);
  args.push_back(value);
  return args;
}

std::vector<std::string> without_flag(std::vector<std::string> args, const std::string& flag) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag) {
      ++i;  // skip the value
      continue;
    }
    if (args[i].rfind(flag + "=", 0) == 0) continue;
    out.push_back(args[i]);
  }
  return out;
}

std::string tau_dir_name(double tau) { return "tau_" + qdag::format_double(tau); }

std::vector<fs::path> archive_dirs(const fs::path& fit_dir) {
  if (fs::exists(fit_dir / "archive.json")) return {fit_dir};
  if (!fs::is_directory(fit_dir)) throw qdag::IoError(fit_dir.string() + " is not a directory");
  std::vector<std::pair<double, fs::path>> found;
  for (const auto& e : fs::directory_iterator(fit_dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_directory() && name.rfind("tau_", 0) == 0 && fs::exists(e.path() / "archive.json")) {
      found.emplace_back(std::stod(name.substr(4)), e.path());
    }
  }
  if (found.empty()) throw qdag::InputError("no draw archives found under " + fit_dir.string());
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [t, p] : found) out.push_back(p);
  return out;
}

std::vector<std::string> node_names(const fs::path& archive_dir, int p) {
  std::vector<std::string> names;
  const fs::path file = archive_dir / "nodes.txt";
  if (fs::exists(file)) {
    std::istringstream in(qdag::read_text(file));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) names.push_back(line);
    }
  }
  if (static_cast<int>(names.size()) != p) {
    names.clear();
    for (int h = 0; h < p; ++h) names.push_back("Y" + std::to_string(h + 1));
  }
  return names;
}

}  // namespace qdagx
