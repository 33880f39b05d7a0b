#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dtest/activation.hpp"
#include "dtest/error.hpp"
#include "dtest/faults.hpp"
#include "dtest/feature_matrix.hpp"

namespace fixtures {

using dtest::RowMatrix;

std::vector<std::string> make_ids(std::size_t n, const std::string& prefix = "i");

RowMatrix uniform_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0);
RowMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double sigma = 1.0);

struct Blobs {
  RowMatrix points;
  std::vector<int> labels;
};

/// `per_blob[c]` points around center c with isotropic noise `sigma`. Centers
/// are `spacing` times scaled standard basis vectors (so every pair of
/// centers is spacing * sqrt(2) apart) unless dims < blobs, in which case
/// they sit on a line `spacing` apart.
Blobs gaussian_blobs(const std::vector<std::size_t>& per_blob, std::size_t dims, double sigma, double spacing,
                     std::uint64_t seed);

/// Population whose outcome table marks every input mispredicted and whose
/// planted fault clustering is the blob label.
struct PlantedPopulation {
  dtest::FeatureMatrix features;
  dtest::FaultClustering clustering;
};
PlantedPopulation planted_population(const std::vector<std::size_t>& per_cluster, std::size_t dims, double sigma,
                                     double spacing, std::uint64_t seed);

/// Trace with one layer per entry of `widths` and uniform activations in [lo, hi).
dtest::ActivationTrace random_trace(const std::vector<std::string>& ids, const std::vector<std::size_t>& widths,
                                    std::mt19937_64& rng, double lo = 0.0, double hi = 1.0);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

/// Writes a small self-consistent experiment workspace into `dir`:
/// features.fmat, trace.atrc, profile.json (+ training matrix), outcomes.csv,
/// clusters.csv, labels.csv and one config per experiment (rq1.json ..
/// rq5.json) referencing them by relative path.
void write_experiment_workspace(const std::filesystem::path& dir);

/// Code of the dtest::Error thrown by `f`, or nullopt if it returns normally.
template <typename F>
std::optional<dtest::ErrorCode> error_code_of(F&& f) {
  try {
    f();
  } catch (const dtest::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace fixtures
