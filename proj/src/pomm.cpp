#include "pbmrf/pomm.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "pbmrf/errors.hpp"
#include "pbmrf/philox.hpp"

namespace pbmrf {

namespace {

constexpr char kMagic[4] = {'P', 'B', 'M', 'S'};

template <class T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t k = 0; k < sizeof(T); ++k) bytes[k] = static_cast<unsigned char>(value >> (8 * k));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw InvalidArgument("sample file truncated");
  }
  T value = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) value |= static_cast<T>(bytes[k]) << (8 * k);
  return value;
}

}  // namespace

double ConditionalTable::probability_one(std::span<const std::uint8_t> x) const {
  std::size_t mask = 0;
  for (std::size_t k = 0; k < dependencies.size(); ++k) {
    if (x[dependencies[k]]) mask |= std::size_t{1} << k;
  }
  return prob_one[mask];
}

PartiallyOrderedMarkovModel::PartiallyOrderedMarkovModel(std::size_t num_variables,
                                                         std::vector<ConditionalTable> tables)
    : n_(num_variables), tables_(std::move(tables)) {}

void PartiallyOrderedMarkovModel::validate() const {
  if (tables_.size() != n_) {
    throw InvalidArgument("POMM: " + std::to_string(tables_.size()) + " tables for " +
                          std::to_string(n_) + " variables");
  }
  // position[v] = step at which v is eliminated.
  std::vector<std::size_t> position(n_, n_);
  for (std::size_t step = 0; step < tables_.size(); ++step) {
    const Index v = tables_[step].variable;
    if (v >= n_ || position[v] != n_) throw InvalidArgument("POMM: bad or repeated variable");
    position[v] = step;
  }
  for (std::size_t step = 0; step < tables_.size(); ++step) {
    const auto& t = tables_[step];
    if (t.dependencies.size() >= 64 ||
        t.prob_one.size() != (std::size_t{1} << t.dependencies.size())) {
      throw InvalidArgument("POMM: table size does not match its dependency set");
    }
    for (Index d : t.dependencies) {
      if (d >= n_ || position[d] <= step) {
        throw InvalidArgument("POMM: variable " + std::to_string(t.variable) +
                              " depends on an earlier or unknown variable");
      }
    }
    for (double p : t.prob_one) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("POMM: probability outside [0, 1] for variable " +
                              std::to_string(t.variable));
      }
    }
  }
}

SampleBatch sample(const PartiallyOrderedMarkovModel& pomm, std::uint64_t seed,
                   std::size_t count, std::uint64_t first_stream) {
  pomm.validate();
  SampleBatch batch;
  batch.seed = seed;
  batch.states.reserve(count);
  batch.log_densities.reserve(count);
  const auto& tables = pomm.tables();
  for (std::size_t draw = 0; draw < count; ++draw) {
    PhiloxStream rng(seed, first_stream + draw);
    State x(pomm.num_variables(), 0);
    double logp = 0.0;
    for (auto it = tables.rbegin(); it != tables.rend(); ++it) {
      const double p = it->probability_one(x);
      const bool one = rng.uniform() < p;
      x[it->variable] = one ? 1 : 0;
      logp += one ? std::log(p) : std::log1p(-p);
    }
    batch.states.push_back(std::move(x));
    batch.log_densities.push_back(logp);
  }
  return batch;
}

double log_density(const PartiallyOrderedMarkovModel& pomm, std::span<const std::uint8_t> x) {
  if (x.size() != pomm.num_variables()) {
    throw InvalidArgument("log_density: state has length " + std::to_string(x.size()) +
                          ", expected " + std::to_string(pomm.num_variables()));
  }
  // Same accumulation order as sample() so the two agree bit for bit.
  double logp = 0.0;
  const auto& tables = pomm.tables();
  for (auto it = tables.rbegin(); it != tables.rend(); ++it) {
    const double p = it->probability_one(x);
    logp += x[it->variable] ? std::log(p) : std::log1p(-p);
  }
  return logp;
}

void write_samples_text(std::ostream& out, const SampleBatch& batch) {
  std::string line;
  for (std::size_t k = 0; k < batch.states.size(); ++k) {
    line.clear();
    for (auto b : batch.states[k]) line += b ? '1' : '0';
    line += ' ';
    line += format_real(batch.log_densities[k]);
    line += '\n';
    out << line;
  }
}

void write_samples_binary(std::ostream& out, const SampleBatch& batch, std::size_t n) {
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  put_le<std::uint64_t>(out, batch.states.size());
  std::vector<char> bits((n + 7) / 8);
  for (std::size_t k = 0; k < batch.states.size(); ++k) {
    std::fill(bits.begin(), bits.end(), 0);
    for (std::size_t v = 0; v < n; ++v) {
      if (batch.states[k][v]) bits[v / 8] = static_cast<char>(bits[v / 8] | (1 << (v % 8)));
    }
    out.write(bits.data(), static_cast<std::streamsize>(bits.size()));
    std::uint64_t raw;
    std::memcpy(&raw, &batch.log_densities[k], sizeof raw);
    put_le<std::uint64_t>(out, raw);
  }
}

SampleBatch read_samples_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw InvalidArgument("not a sample file");
  }
  const auto n = get_le<std::uint32_t>(in);
  const auto count = get_le<std::uint64_t>(in);
  SampleBatch batch;
  std::vector<char> bits((n + 7) / 8);
  for (std::uint64_t k = 0; k < count; ++k) {
    if (!in.read(bits.data(), static_cast<std::streamsize>(bits.size()))) {
      throw InvalidArgument("sample file truncated");
    }
    State x(n);
    for (std::size_t v = 0; v < n; ++v) x[v] = (bits[v / 8] >> (v % 8)) & 1;
    const auto raw = get_le<std::uint64_t>(in);
    double value;
    std::memcpy(&value, &raw, sizeof value);
    batch.states.push_back(std::move(x));
    batch.log_densities.push_back(value);
  }
  return batch;
}

}  // namespace pbmrf
