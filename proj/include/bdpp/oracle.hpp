#pragma once
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bdpp/searchspace.hpp"
#include "bdpp/tensor.hpp"

namespace bdpp {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Tensor x;             // [n x dim]
  std::vector<int> y;   // class labels

  std::size_t size() const { return y.size(); }
};

struct SyntheticTaskParams {
  std::uint64_t seed = 0;
  std::size_t n = 256;
  std::size_t dim = 8;
  std::size_t num_classes = 4;
  double noise = 1.0;
};

// Mixture of class-conditional Gaussians with a planted structure: class
// means are 3-sigma separated one-hot directions mixed through a fixed
// rotation, plus a relu-detectable folded component per class pair.
Dataset generate_task(const SyntheticTaskParams& p);

// Precomputed genotype -> score table over the whole 5^6 space.
class TabularBenchmark {
 public:
  enum class Provenance { Generated, Imported };

  static TabularBenchmark generate(std::uint64_t seed);
  static TabularBenchmark load_csv(const std::string& path);
  void save_csv(const std::string& path) const;

  double evaluate(const std::string& genotype) const;
  double evaluate(const Genotype& g, const OpSet& ops) const;

  // Exhaustive argmax; ties broken by genotype string order. Throws if the
  // table does not cover the full space (lists missing genotypes).
  std::pair<std::string, double> best() const;

  std::size_t size() const { return scores_.size(); }
  bool complete() const;
  Provenance provenance() const { return provenance_; }
  const std::vector<std::pair<std::string, double>>& entries() const {
    return ordered_;
  }

 private:
  std::unordered_map<std::string, double> scores_;
  std::vector<std::pair<std::string, double>> ordered_;  // insertion order
  Provenance provenance_ = Provenance::Generated;
};

// Enumerates all |O|^6 genotypes in fixed counting order (edge 5 fastest).
std::vector<Genotype> enumerate_genotypes(const OpSet& ops);

}  // namespace bdpp
