#include "l2net/expr_io.hpp"

#include "l2net/errors.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace l2net {

namespace {

std::vector<std::string> split(const std::string &line, char delim) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

void strip_cr(std::string &line) {
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
}

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \"");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \"");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(const std::string &cell) {
  const std::string t = trim(cell);
  if (t.empty())
    return std::nullopt;
  double v = 0.0;
  const char *begin = t.data();
  const char *end = t.data() + t.size();
  if (*begin == '+')
    ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v))
    return std::nullopt;
  return v;
}

char detect_delimiter(const std::string &line) {
  return line.find('\t') != std::string::npos ? '\t' : ',';
}

} // namespace

ExpressionMatrix::ExpressionMatrix(std::vector<std::string> gene_ids,
                                   std::vector<std::string> sample_ids,
                                   std::vector<double> values)
    : gene_ids_(std::move(gene_ids)), sample_ids_(std::move(sample_ids)),
      values_(std::move(values)) {
  if (gene_ids_.size() < 2)
    throw InputError("TooFewGenes", "expression matrix needs at least 2 genes");
  if (sample_ids_.size() < 4)
    throw InputError("TooFewSamples",
                     "expression matrix needs at least 4 samples (got " +
                         std::to_string(sample_ids_.size()) + ")");
  if (values_.size() != gene_ids_.size() * sample_ids_.size())
    throw InputError("ShapeMismatch", "value count does not match G x N");
  std::unordered_set<std::string> seen;
  for (const auto &id : gene_ids_)
    if (!seen.insert(id).second)
      throw InputError("DuplicateGene", "duplicate gene id '" + id + "'");
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      throw InputError("MissingValue",
                       "non-finite value for gene '" +
                           gene_ids_[i / sample_ids_.size()] + "'");
}

ExpressionMatrix
ExpressionMatrix::select_genes(std::span<const std::size_t> genes) const {
  std::vector<std::string> ids;
  std::vector<double> vals;
  ids.reserve(genes.size());
  vals.reserve(genes.size() * n_samples());
  for (auto g : genes) {
    ids.push_back(gene_ids_.at(g));
    const auto r = row(g);
    vals.insert(vals.end(), r.begin(), r.end());
  }
  return ExpressionMatrix(std::move(ids), sample_ids_, std::move(vals));
}

ParseResult parse_expression(const std::filesystem::path &path,
                             const ParseOptions &options) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open expression file " + path.string());

  std::string line;
  std::vector<std::string> sample_ids;
  std::vector<std::string> gene_ids;
  std::vector<double> values;
  ParseResult result;
  char delim = options.delimiter.value_or('\0');
  bool first = true;
  std::size_t n_cols = 0;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty())
      continue;
    if (delim == '\0')
      delim = detect_delimiter(line);
    auto cells = split(line, delim);
    if (first) {
      first = false;
      n_cols = cells.size();
      if (n_cols < 2)
        throw InputError("ParseError", "expression file needs a gene id column "
                                       "and at least one sample column");
      if (options.has_header) {
        for (std::size_t j = 1; j < cells.size(); ++j)
          sample_ids.push_back(trim(cells[j]));
        continue;
      }
      for (std::size_t j = 1; j < cells.size(); ++j)
        sample_ids.push_back("s" + std::to_string(j));
    }
    if (cells.size() != n_cols)
      throw InputError("ParseError", "line " + std::to_string(line_no) +
                                         " has " + std::to_string(cells.size()) +
                                         " columns, expected " +
                                         std::to_string(n_cols));
    const std::string gene = trim(cells[0]);
    std::vector<double> row;
    row.reserve(n_cols - 1);
    std::optional<std::size_t> bad;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      auto v = parse_number(cells[j]);
      if (!v) {
        bad = j - 1;
        break;
      }
      row.push_back(*v);
    }
    if (bad) {
      if (options.drop_missing) {
        result.dropped_genes.push_back(gene);
        continue;
      }
      throw InputError("MissingValue", "gene '" + gene +
                                           "' has a missing value in sample '" +
                                           sample_ids[*bad] + "'");
    }
    gene_ids.push_back(gene);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (first)
    throw InputError("ParseError", "expression file is empty");
  result.matrix = ExpressionMatrix(std::move(gene_ids), std::move(sample_ids),
                                   std::move(values));
  return result;
}

void write_expression(const ExpressionMatrix &expr,
                      const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "gene";
  for (const auto &s : expr.sample_ids())
    out << '\t' << s;
  out << '\n';
  for (std::size_t g = 0; g < expr.n_genes(); ++g) {
    out << expr.gene_ids()[g];
    for (double v : expr.row(g))
      out << '\t' << format_double(v);
    out << '\n';
  }
  if (!out)
    throw IoError("error writing " + path.string());
}

const char *component_label(Component c) {
  switch (c) {
  case Component::Null:
    return "C0";
  case Component::Positive:
    return "C1";
  case Component::Negative:
    return "C2";
  }
  return "C0";
}

Component parse_component(const std::string &label) {
  if (label == "C0")
    return Component::Null;
  if (label == "C1")
    return Component::Positive;
  if (label == "C2")
    return Component::Negative;
  throw InputError("ParseError", "unknown component label '" + label + "'");
}

std::string format_double(double v) {
  if (std::isnan(v))
    return "NA";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {
constexpr const char *kEdgeHeader =
    "gene_a\tgene_b\tweight\tpost_null\tpost_pos\tpost_neg\tcomponent";

double parse_field(const std::string &cell, std::size_t line_no) {
  if (cell == "NA")
    return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf")
    return std::numeric_limits<double>::infinity();
  if (cell == "-inf")
    return -std::numeric_limits<double>::infinity();
  auto v = parse_number(cell);
  if (!v)
    throw InputError("ParseError", "bad numeric field '" + cell + "' on line " +
                                       std::to_string(line_no));
  return *v;
}
} // namespace

EdgeListWriter::EdgeListWriter(const std::filesystem::path &path,
                               const std::vector<std::string> &gene_ids)
    : out_(path), gene_ids_(&gene_ids), path_(path) {
  if (!out_)
    throw IoError("cannot write " + path.string());
  out_ << kEdgeHeader << '\n';
}

void EdgeListWriter::write(const EdgeRecord &r) {
  const auto &ids = *gene_ids_;
  if (r.a >= ids.size() || r.b >= ids.size())
    throw InputError("InvalidParam", "edge references gene index outside 0..G-1");
  const auto lo = std::min(r.a, r.b);
  const auto hi = std::max(r.a, r.b);
  out_ << ids[lo] << '\t' << ids[hi] << '\t' << format_double(r.weight) << '\t'
       << format_double(r.post_null) << '\t' << format_double(r.post_pos)
       << '\t' << format_double(r.post_neg) << '\t'
       << component_label(r.component) << '\n';
  ++rows_;
}

void EdgeListWriter::close() {
  out_.flush();
  if (!out_)
    throw IoError("error writing " + path_.string());
  out_.close();
}

void write_edge_list(std::span<const EdgeRecord> records,
                     const std::vector<std::string> &gene_ids,
                     const std::filesystem::path &path) {
  EdgeListWriter writer(path, gene_ids);
  for (const auto &r : records)
    writer.write(r);
  writer.close();
}

std::unordered_map<std::string, std::uint32_t>
index_genes(const std::vector<std::string> &gene_ids) {
  std::unordered_map<std::string, std::uint32_t> index;
  index.reserve(gene_ids.size());
  for (std::size_t i = 0; i < gene_ids.size(); ++i)
    index.emplace(gene_ids[i], static_cast<std::uint32_t>(i));
  return index;
}

std::vector<EdgeRecord> parse_edge_list(const std::filesystem::path &path,
                                        const std::vector<std::string> &gene_ids) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open edge list " + path.string());
  const auto index = index_genes(gene_ids);
  std::vector<EdgeRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty())
      continue;
    if (line_no == 1 && line.rfind("gene_a", 0) == 0)
      continue;
    const auto cells = split(line, '\t');
    if (cells.size() != 7)
      throw InputError("ParseError", "edge list line " + std::to_string(line_no) +
                                         " does not have 7 columns");
    auto lookup = [&](const std::string &name) {
      auto it = index.find(name);
      if (it == index.end())
        throw InputError("ParseError", "unknown gene '" + name +
                                           "' in edge list line " +
                                           std::to_string(line_no));
      return it->second;
    };
    EdgeRecord r;
    r.a = lookup(cells[0]);
    r.b = lookup(cells[1]);
    if (r.a == r.b)
      throw InputError("ParseError", "self-loop in edge list line " +
                                         std::to_string(line_no));
    if (r.a > r.b)
      std::swap(r.a, r.b);
    r.weight = parse_field(cells[2], line_no);
    r.post_null = parse_field(cells[3], line_no);
    r.post_pos = parse_field(cells[4], line_no);
    r.post_neg = parse_field(cells[5], line_no);
    r.component = parse_component(cells[6]);
    records.push_back(r);
  }
  return records;
}

std::vector<std::string>
collect_edge_list_genes(std::span<const std::filesystem::path> paths) {
  std::vector<std::string> genes;
  std::unordered_set<std::string> seen;
  for (const auto &path : paths) {
    std::ifstream in(path);
    if (!in)
      throw IoError("cannot open edge list " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      strip_cr(line);
      if (line.empty() || (line_no == 1 && line.rfind("gene_a", 0) == 0))
        continue;
      const auto cells = split(line, '\t');
      for (std::size_t j = 0; j < 2 && j < cells.size(); ++j)
        if (seen.insert(cells[j]).second)
          genes.push_back(cells[j]);
    }
  }
  return genes;
}

} // namespace l2net
