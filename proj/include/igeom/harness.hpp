#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "igeom/coupling.hpp"
#include "igeom/flowline.hpp"
#include "igeom/gff.hpp"
#include "igeom/sle.hpp"

namespace igeom {

inline constexpr const char* kToolVersion = "0.3.0";

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 1;
  std::size_t runs = 0;  // 0 keeps the preset's run count
  int jobs = 1;
  std::filesystem::path outDir;  // empty: no files written

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// SHA-256 of the canonical config, ignoring jobs and outDir.
  std::string hash() const;
  /// Throws ValidationError naming the offending field path.
  void validate() const;
};

struct OutputRecord {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string configHash;
  std::uint64_t seed = 0;
  std::string toolVersion = kToolVersion;
  std::string startedAt;
  double seconds = 0.0;
  std::vector<OutputRecord> outputs;
  bool pass = false;
  nlohmann::json report;

  nlohmann::json to_json() const;
};

std::vector<std::string> experiment_names();

/// Default parameters of an experiment.
nlohmann::json experiment_preset(const std::string& name);

/// Preset overlaid with the config's parameters; runs overrides the preset count.
nlohmann::json resolved_parameters(const ExperimentConfig& config);

RunManifest run_experiment(const ExperimentConfig& config);

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_file(const std::filesystem::path& path);

/// Runs f(0..n-1) on up to `jobs` threads; results are returned in index order.
template <class T>
std::vector<T> parallel_map(std::size_t n, int jobs, const std::function<T(std::size_t)>& f) {
  std::vector<T> out(n);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex errorMutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          out[i] = f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(errorMutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

// ---------------------------------------------------------------------------
// Field setups shared by the flow-line experiments

struct FieldSetup {
  DerivedConstants consts;
  TriangulatedGrid grid;
  DirichletOperator op;
  BoundaryTrace boundary;

  FieldSetup(double kappa, int n, const StepFunction& halfPlane, double offset);
  DiscreteField sample(std::uint64_t seed) const;
};

/// Half-plane preimage of the bottom-edge grid vertex in column i.
double bottom_vertex_preimage(const TriangulatedGrid& grid, int column);

}  // namespace igeom
