#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace l2net {

/// Genes x samples matrix of normalized expression values, stored row-major
/// (one contiguous row per gene).
class ExpressionMatrix {
public:
  ExpressionMatrix() = default;

  /// Validates G >= 2, N >= 4, unique gene ids, finite values and
  /// `values.size() == G * N`.
  ExpressionMatrix(std::vector<std::string> gene_ids,
                   std::vector<std::string> sample_ids,
                   std::vector<double> values);

  std::size_t n_genes() const noexcept { return gene_ids_.size(); }
  std::size_t n_samples() const noexcept { return sample_ids_.size(); }

  const std::vector<std::string> &gene_ids() const noexcept { return gene_ids_; }
  const std::vector<std::string> &sample_ids() const noexcept { return sample_ids_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const double> row(std::size_t gene) const {
    return {values_.data() + gene * n_samples(), n_samples()};
  }
  double at(std::size_t gene, std::size_t sample) const {
    return values_[gene * n_samples() + sample];
  }

  /// Matrix restricted to the given gene rows, in the given order.
  ExpressionMatrix select_genes(std::span<const std::size_t> genes) const;

private:
  std::vector<std::string> gene_ids_;
  std::vector<std::string> sample_ids_;
  std::vector<double> values_;
};

struct ParseOptions {
  /// '\t' or ','; nullopt auto-detects from the first line.
  std::optional<char> delimiter;
  bool has_header = true;
  /// When set, rows with missing or non-numeric cells are dropped and listed
  /// in `ParseResult::dropped_genes` instead of raising MissingValue.
  bool drop_missing = false;
};

struct ParseResult {
  ExpressionMatrix matrix;
  std::vector<std::string> dropped_genes;
};

/// Reads a delimiter-separated genes x samples file. The first column holds
/// gene ids; remaining columns must be numeric.
ParseResult parse_expression(const std::filesystem::path &path,
                             const ParseOptions &options = {});

void write_expression(const ExpressionMatrix &expr,
                      const std::filesystem::path &path);

/// Mixture component an edge is assigned to.
enum class Component : std::uint8_t { Null = 0, Positive = 1, Negative = 2 };

const char *component_label(Component c);
Component parse_component(const std::string &label);

/// One putative edge with its weight and posterior class probabilities.
struct EdgeRecord {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double weight = 0.0;
  double post_null = 0.0;
  double post_pos = 0.0;
  double post_neg = 0.0;
  Component component = Component::Null;

  friend bool operator==(const EdgeRecord &, const EdgeRecord &) = default;
};

/// Streams edge records to a TSV with columns
/// gene_a, gene_b, weight, post_null, post_pos, post_neg, component.
class EdgeListWriter {
public:
  EdgeListWriter(const std::filesystem::path &path,
                 const std::vector<std::string> &gene_ids);

  void write(const EdgeRecord &record);
  void close();
  std::size_t rows_written() const noexcept { return rows_; }

private:
  std::ofstream out_;
  const std::vector<std::string> *gene_ids_;
  std::filesystem::path path_;
  std::size_t rows_ = 0;
};

void write_edge_list(std::span<const EdgeRecord> records,
                     const std::vector<std::string> &gene_ids,
                     const std::filesystem::path &path);

/// Reads an edge-list TSV. Gene names are resolved against `gene_ids`;
/// unknown names raise a ParseError. "NA" posteriors read back as NaN.
std::vector<EdgeRecord> parse_edge_list(const std::filesystem::path &path,
                                        const std::vector<std::string> &gene_ids);

/// Gene ids in order of first appearance across the given edge lists.
std::vector<std::string>
collect_edge_list_genes(std::span<const std::filesystem::path> paths);

std::unordered_map<std::string, std::uint32_t>
index_genes(const std::vector<std::string> &gene_ids);

/// Formats a double so that parsing the text gives back the same value.
std::string format_double(double v);

} // namespace l2net
