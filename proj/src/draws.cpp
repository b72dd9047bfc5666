#include "dcm/draws.hpp"

#include <cstring>
#include <fstream>
#include <unordered_map>

#include "dcm/error.hpp"
#include "dcm/rng.hpp"
#include "dcm/stats.hpp"

namespace dcm {

double halton_point(std::uint64_t index, unsigned base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

std::vector<unsigned> halton_bases(int D) {
  std::vector<unsigned> primes;
  unsigned candidate = 2;
  while (static_cast<int>(primes.size()) < D) {
    bool is_prime = true;
    for (unsigned p : primes) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        is_prime = false;
        break;
      }
    }
    if (is_prime) primes.push_back(candidate);
    ++candidate;
  }
  return primes;
}

namespace {

constexpr std::uint64_t kHaltonBurnIn = 10;

// situation -> block index; one block per respondent (order of first
// appearance) or per situation when ids are missing.
std::vector<int> assign_blocks(const ChoiceDataset& ds, int* n_blocks) {
  const int n = ds.n_situations();
  std::vector<int> map(n);
  if (!ds.has_respondents()) {
    for (int i = 0; i < n; ++i) map[i] = i;
    *n_blocks = n;
    return map;
  }
  std::unordered_map<std::string, int> block_of;
  block_of.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& rid = ds.situations[i].respondent_id;
    const auto it = block_of.try_emplace(rid, static_cast<int>(block_of.size())).first;
    map[i] = it->second;
  }
  *n_blocks = static_cast<int>(block_of.size());
  return map;
}

}  // namespace

DrawMatrix DrawMatrix::halton(const ChoiceDataset& ds, int R, int D) {
  if (R < 1) throw Error("draw count R must be >= 1");
  if (D < 1) throw Error("draw dimension D must be >= 1");
  DrawMatrix m;
  m.R = R;
  m.D = D;
  m.generator = DrawGenerator::Halton;
  int n_blocks = 0;
  m.situation_block = assign_blocks(ds, &n_blocks);
  m.data.resize(static_cast<std::size_t>(n_blocks) * R * D);
  const auto bases = halton_bases(D);
  for (int d = 0; d < D; ++d) {
    const unsigned base = bases[d];
    std::uint64_t index = kHaltonBurnIn;
    for (int b = 0; b < n_blocks; ++b) {
      double* block = m.data.data() + static_cast<std::size_t>(b) * R * D;
      for (int r = 0; r < R; ++r)
        block[static_cast<std::size_t>(r) * D + d] =
            inv_normal_cdf(halton_point(++index, base));
    }
  }
  return m;
}

DrawMatrix DrawMatrix::pseudo_random(const ChoiceDataset& ds, int R, int D,
                                     std::uint64_t seed) {
  if (R < 1) throw Error("draw count R must be >= 1");
  if (D < 1) throw Error("draw dimension D must be >= 1");
  DrawMatrix m;
  m.R = R;
  m.D = D;
  m.generator = DrawGenerator::PseudoRandom;
  int n_blocks = 0;
  m.situation_block = assign_blocks(ds, &n_blocks);
  m.data.resize(static_cast<std::size_t>(n_blocks) * R * D);
  for (int b = 0; b < n_blocks; ++b) {
    Rng rng(seed, "draws", static_cast<std::uint64_t>(b));
    double* block = m.data.data() + static_cast<std::size_t>(b) * R * D;
    for (std::size_t k = 0; k < static_cast<std::size_t>(R) * D; ++k)
      block[k] = rng.normal();
  }
  return m;
}

void DrawMatrix::write_binary(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  const std::uint32_t header[4] = {0x57415244u,  // "DRAW" little-endian
                                   static_cast<std::uint32_t>(R),
                                   static_cast<std::uint32_t>(D),
                                   static_cast<std::uint32_t>(n_blocks())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw Error("write to '" + path + "' failed");
}

DrawMatrix DrawMatrix::read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || header[0] != 0x57415244u)
    throw ParseError("'" + path + "' is not a draw sidecar");
  DrawMatrix m;
  m.R = static_cast<int>(header[1]);
  m.D = static_cast<int>(header[2]);
  const std::size_t n = static_cast<std::size_t>(header[3]) * m.R * m.D;
  m.data.resize(n);
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw ParseError("'" + path + "' truncated");
  return m;
}

}  // namespace dcm
