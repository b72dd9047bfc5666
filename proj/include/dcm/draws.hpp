#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcm/dataset.hpp"

namespace dcm {

enum class DrawGenerator { Halton, PseudoRandom };

// Standard-normal draw blocks approximating the mixing integral. One block of
// R x D values per respondent (shared across that respondent's situations) or
// per situation when respondent ids are absent.
struct DrawMatrix {
  int R = 0;
  int D = 0;
  DrawGenerator generator = DrawGenerator::Halton;
  std::vector<double> data;             // n_blocks * R * D, row-major per block
  std::vector<int> situation_block;     // situation index -> block index

  int n_blocks() const {
    return R * D == 0 ? 0 : static_cast<int>(data.size()) / (R * D);
  }
  std::span<const double> block(int b) const {
    return {data.data() + static_cast<std::size_t>(b) * R * D,
            static_cast<std::size_t>(R) * D};
  }
  std::span<const double> block_for_situation(int i) const {
    return block(situation_block[i]);
  }

  // Column d of every block comes from the Halton sequence with the d-th
  // prime base, first 10 points discarded, mapped through the normal
  // quantile. Blocks are consecutive runs of the same sequence.
  static DrawMatrix halton(const ChoiceDataset& ds, int R, int D);
  static DrawMatrix pseudo_random(const ChoiceDataset& ds, int R, int D,
                                  std::uint64_t seed);

  // Binary sidecar: 16-byte header (magic "DRAW", R, D, n_blocks as u32,
  // little-endian) followed by the values as 64-bit floats.
  void write_binary(const std::string& path) const;
  static DrawMatrix read_binary(const std::string& path);
};

// Radical-inverse of `index` (1-based) in the given base.
double halton_point(std::uint64_t index, unsigned base);

// First D primes, the per-dimension Halton bases.
std::vector<unsigned> halton_bases(int D);

}  // namespace dcm
