#include "l2net/corr_engine.hpp"

#include "l2net/errors.hpp"
#include "l2net/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace l2net {

namespace {

struct Moments {
  double mean = 0.0;
  double sum_sq = 0.0;
};

Moments centered_moments(std::span<const double> x) {
  Moments m;
  for (double v : x)
    m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) {
    const double d = v - m.mean;
    m.sum_sq += d * d;
  }
  return m;
}

bool is_constant(const Moments &m, std::size_t n) {
  const double sd = std::sqrt(m.sum_sq / static_cast<double>(n));
  return !(sd > 1e-12 * std::max(1.0, std::abs(m.mean)));
}

} // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InputError("InvalidParam", "pearson: vectors differ in length");
  if (x.size() < 2)
    throw InputError("InvalidParam", "pearson: need at least 2 observations");
  const auto mx = centered_moments(x);
  const auto my = centered_moments(y);
  if (is_constant(mx, x.size()))
    throw InputError("ZeroVariance", "pearson: first vector is constant");
  if (is_constant(my, y.size()))
    throw InputError("ZeroVariance", "pearson: second vector is constant");
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    sxy += (x[i] - mx.mean) * (y[i] - my.mean);
  const double r = sxy / std::sqrt(mx.sum_sq * my.sum_sq);
  return std::clamp(r, -1.0, 1.0);
}

double fisher_z(double r, double clamp) {
  if (std::abs(r) >= clamp)
    r = std::copysign(clamp, r);
  return std::atanh(r);
}

GenePair pair_at(std::uint64_t g, std::uint64_t index) {
  // Largest m with pair_index(g, m, m + 1) <= index.
  std::uint64_t lo = 0;
  std::uint64_t hi = g - 2;
  while (lo < hi) {
    const std::uint64_t mid = (lo + hi + 1) / 2;
    if (pair_index(g, mid, mid + 1) <= index)
      lo = mid;
    else
      hi = mid - 1;
  }
  const std::uint64_t n = index - pair_index(g, lo, lo + 1) + lo + 1;
  return {static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(n)};
}

CorrelationEngine::CorrelationEngine(const ExpressionMatrix &expr, double clamp)
    : n_genes_(expr.n_genes()), n_samples_(expr.n_samples()), clamp_(clamp),
      standardized_(expr.n_genes() * expr.n_samples()) {
  for (std::size_t g = 0; g < n_genes_; ++g) {
    const auto row = expr.row(g);
    const auto m = centered_moments(row);
    if (is_constant(m, row.size()))
      throw InputError("ZeroVariance", "gene '" + expr.gene_ids()[g] +
                                           "' (index " + std::to_string(g) +
                                           ") has zero variance");
    const double scale = 1.0 / std::sqrt(m.sum_sq);
    double *out = standardized_.data() + g * n_samples_;
    for (std::size_t i = 0; i < row.size(); ++i)
      out[i] = (row[i] - m.mean) * scale;
  }
}

double CorrelationEngine::correlation(std::size_t m, std::size_t n) const {
  const double *a = standardized_.data() + m * n_samples_;
  const double *b = standardized_.data() + n * n_samples_;
  double s = 0.0;
  for (std::size_t i = 0; i < n_samples_; ++i)
    s += a[i] * b[i];
  return std::clamp(s, -1.0, 1.0);
}

void CorrelationEngine::compute_batch(std::uint64_t first, std::uint64_t count,
                                      WeightBatch &batch) const {
  const std::uint64_t total = n_pairs();
  count = std::min(count, total - std::min(first, total));
  batch.pairs.resize(count);
  batch.weights.resize(count);
  if (count == 0)
    return;
  auto p = pair_at(n_genes_, first);
  std::uint32_t m = p.m;
  std::uint32_t n = p.n;
  for (std::uint64_t k = 0; k < count; ++k) {
    batch.pairs[k] = {m, n};
    batch.weights[k] = weight(m, n);
    if (++n == n_genes_) {
      ++m;
      n = m + 1;
    }
  }
}

void CorrelationEngine::for_each_batch(
    std::size_t block_size, unsigned threads,
    const std::function<void(const WeightBatch &)> &consume) const {
  if (block_size == 0)
    throw InputError("InvalidParam", "block size must be positive");
  const std::uint64_t total = n_pairs();
  const std::uint64_t n_blocks = (total + block_size - 1) / block_size;
  const unsigned width = std::max(1u, threads);
  std::vector<WeightBatch> slots(std::min<std::uint64_t>(width, n_blocks));
  for (std::uint64_t start = 0; start < n_blocks; start += slots.size()) {
    const std::size_t in_flight =
        static_cast<std::size_t>(std::min<std::uint64_t>(slots.size(), n_blocks - start));
    parallel_for(in_flight, width, [&](std::size_t i) {
      compute_batch((start + i) * block_size, block_size, slots[i]);
    });
    for (std::size_t i = 0; i < in_flight; ++i)
      consume(slots[i]);
  }
}

std::vector<double> CorrelationEngine::all_weights(unsigned threads) const {
  std::vector<double> out;
  out.reserve(n_pairs());
  for_each_batch(kDefaultBlockSize, threads, [&](const WeightBatch &b) {
    out.insert(out.end(), b.weights.begin(), b.weights.end());
  });
  return out;
}

WeightStream::WeightStream(const CorrelationEngine &engine, std::size_t block_size)
    : engine_(&engine), block_size_(block_size) {
  if (block_size == 0)
    throw InputError("InvalidParam", "block size must be positive");
}

std::optional<WeightBatch> WeightStream::next() {
  if (cursor_ >= engine_->n_pairs())
    return std::nullopt;
  WeightBatch batch;
  engine_->compute_batch(cursor_, block_size_, batch);
  cursor_ += batch.size();
  return batch;
}

namespace {

constexpr std::size_t kRecordBytes = 16;

template <class T> T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

} // namespace

void write_weight_cache(const CorrelationEngine &engine,
                        const std::filesystem::path &path,
                        std::size_t block_size, unsigned threads) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write weight cache " + path.string());
  std::vector<unsigned char> buffer;
  engine.for_each_batch(block_size, threads, [&](const WeightBatch &b) {
    buffer.resize(b.size() * kRecordBytes);
    unsigned char *p = buffer.data();
    for (std::size_t k = 0; k < b.size(); ++k, p += kRecordBytes) {
      const auto m = to_little(b.pairs[k].m);
      const auto n = to_little(b.pairs[k].n);
      const auto w = to_little(b.weights[k]);
      std::memcpy(p, &m, 4);
      std::memcpy(p + 4, &n, 4);
      std::memcpy(p + 8, &w, 8);
    }
    out.write(reinterpret_cast<const char *>(buffer.data()),
              static_cast<std::streamsize>(buffer.size()));
  });
  if (!out)
    throw IoError("error writing weight cache " + path.string());
}

void read_weight_cache(const std::filesystem::path &path, std::size_t block_size,
                       const std::function<void(const WeightBatch &)> &consume) {
  if (block_size == 0)
    throw InputError("InvalidParam", "block size must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open weight cache " + path.string());
  std::vector<unsigned char> buffer(block_size * kRecordBytes);
  WeightBatch batch;
  while (in) {
    in.read(reinterpret_cast<char *>(buffer.data()),
            static_cast<std::streamsize>(buffer.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0)
      break;
    if (got % kRecordBytes != 0)
      throw IoError("truncated weight cache " + path.string());
    const std::size_t count = got / kRecordBytes;
    batch.pairs.resize(count);
    batch.weights.resize(count);
    const unsigned char *p = buffer.data();
    for (std::size_t k = 0; k < count; ++k, p += kRecordBytes) {
      std::uint32_t m, n;
      double w;
      std::memcpy(&m, p, 4);
      std::memcpy(&n, p + 4, 4);
      std::memcpy(&w, p + 8, 8);
      batch.pairs[k] = {to_little(m), to_little(n)};
      batch.weights[k] = to_little(w);
    }
    consume(batch);
  }
}

} // namespace l2net
