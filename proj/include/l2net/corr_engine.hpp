#pragma once

#include "l2net/expr_io.hpp"
#include "l2net/gene_pair.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace l2net {

/// Correlations are clamped to +-(1 - 1e-8) before arctanh so that
/// duplicate rows still give finite weights.
inline constexpr double kDefaultClamp = 1.0 - 1e-8;
inline constexpr std::size_t kDefaultBlockSize = 1'000'000;

/// A contiguous run of the upper-triangle pair sequence with Fisher-z weights.
struct WeightBatch {
  std::vector<GenePair> pairs;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
};

/// Sample Pearson correlation, computed in two passes (means, then centered
/// moments). Throws InputError("ZeroVariance") for a constant argument.
double pearson(std::span<const double> x, std::span<const double> y);

/// arctanh(r) with |r| clamped to `clamp`.
double fisher_z(double r, double clamp = kDefaultClamp);

/// Number of unordered pairs among g items.
constexpr std::uint64_t pair_count(std::uint64_t g) { return g * (g - 1) / 2; }

/// Position of (m, n), m < n, in the row-major upper-triangle order.
constexpr std::uint64_t pair_index(std::uint64_t g, std::uint64_t m,
                                   std::uint64_t n) {
  return m * g - m * (m + 1) / 2 + (n - m - 1);
}

GenePair pair_at(std::uint64_t g, std::uint64_t index);

/// Fisher-z weights for every gene pair of an expression matrix.
///
/// Rows are centered and scaled once on construction (ZeroVariance is raised
/// there, naming the first constant gene); afterwards every pair weight is a
/// dot product. Batches follow the row-major upper-triangle order and their
/// contents do not depend on the block size or thread count.
class CorrelationEngine {
public:
  explicit CorrelationEngine(const ExpressionMatrix &expr,
                             double clamp = kDefaultClamp);

  std::size_t n_genes() const noexcept { return n_genes_; }
  std::size_t n_samples() const noexcept { return n_samples_; }
  std::uint64_t n_pairs() const noexcept { return pair_count(n_genes_); }

  double correlation(std::size_t m, std::size_t n) const;
  double weight(std::size_t m, std::size_t n) const {
    return fisher_z(correlation(m, n), clamp_);
  }

  /// Fills `batch` with pairs [first, first + count) of the stream.
  void compute_batch(std::uint64_t first, std::uint64_t count,
                     WeightBatch &batch) const;

  /// Computes all batches (up to `threads` at a time) and hands them to
  /// `consume` strictly in stream order.
  void for_each_batch(std::size_t block_size, unsigned threads,
                      const std::function<void(const WeightBatch &)> &consume) const;

  /// All K weights in stream order.
  std::vector<double> all_weights(unsigned threads = 1) const;

private:
  std::size_t n_genes_;
  std::size_t n_samples_;
  double clamp_;
  std::vector<double> standardized_;
};

/// Pull-style view of the weight stream.
class WeightStream {
public:
  WeightStream(const CorrelationEngine &engine, std::size_t block_size);
  std::optional<WeightBatch> next();

private:
  const CorrelationEngine *engine_;
  std::size_t block_size_;
  std::uint64_t cursor_ = 0;
};

/// Binary cache: flat little-endian records (u32 m, u32 n, f64 w).
void write_weight_cache(const CorrelationEngine &engine,
                        const std::filesystem::path &path,
                        std::size_t block_size = kDefaultBlockSize,
                        unsigned threads = 1);

/// Reads a cache written by write_weight_cache in batches of `block_size`.
void read_weight_cache(const std::filesystem::path &path, std::size_t block_size,
                       const std::function<void(const WeightBatch &)> &consume);

} // namespace l2net
