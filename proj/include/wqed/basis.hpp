#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "lattice.hpp"

namespace wqed {

struct TruncationRule {
  std::optional<int> max_pairwise_photon_spread;  // three-photon blocks only
};

// Emitter bit i set means emitter i is excited. Photon sites are sorted ascending.
struct Configuration {
  std::uint32_t pattern = 0;
  int n_photons = 0;
  std::array<int, 3> sites{0, 0, 0};

  bool excited(int emitter) const { return (pattern >> emitter) & 1u; }
  int occupancy(int site) const {
    int n = 0;
    for (int i = 0; i < n_photons; ++i) n += sites[i] == site;
    return n;
  }
  friend bool operator==(const Configuration& a, const Configuration& b) {
    if (a.pattern != b.pattern || a.n_photons != b.n_photons) return false;
    for (int i = 0; i < a.n_photons; ++i)
      if (a.sites[i] != b.sites[i]) return false;
    return true;
  }
};

struct Block {
  std::uint32_t pattern = 0;
  int n_photons = 0;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::vector<std::size_t> row_offset;  // three-photon blocks: start of each n1 row
  int span = 0;                         // allowed n3 - n1
};

inline constexpr std::size_t kDefaultStateBudget = 12'000'000;

class SectorBasis {
 public:
  SectorBasis() = default;

  SectorBasis(LatticeSpec lattice, std::vector<EmitterSpec> emitters, int total_excitations,
              TruncationRule truncation = {}, std::size_t state_budget = kDefaultStateBudget)
      : lattice_(lattice), emitters_(std::move(emitters)), total_(total_excitations), truncation_(truncation) {
    if (total_ < 1 || total_ > 3) throw InvalidSpec("total excitations must be 1, 2 or 3");
    if (lattice_.n_sites < 1) throw InvalidSpec("lattice has no sites");
    const int n_em = static_cast<int>(emitters_.size());
    if (n_em > 8) throw InvalidSpec("too many emitters");
    const std::size_t N = lattice_.n_sites;
    std::size_t offset = 0;
    // Patterns in lexicographic order of the e/g string with e < g, emitter 0 first.
    for (std::uint32_t m = 0; m < (1u << n_em); ++m) {
      std::uint32_t pattern = 0;
      for (int i = 0; i < n_em; ++i)
        if (((m >> (n_em - 1 - i)) & 1u) == 0) pattern |= 1u << i;
      const int photons = total_ - __builtin_popcount(pattern);
      if (photons < 0 || photons > 3) continue;
      Block b;
      b.pattern = pattern;
      b.n_photons = photons;
      b.offset = offset;
      if (photons == 0) {
        b.size = 1;
      } else if (photons == 1) {
        b.size = N;
      } else if (photons == 2) {
        b.size = N * (N + 1) / 2;
      } else {
        const int R = truncation_.max_pairwise_photon_spread.value_or(static_cast<int>(N) - 1);
        if (R < 0) throw InvalidSpec("spread cutoff must be non-negative");
        b.span = std::min<int>(R, static_cast<int>(N) - 1);
        std::size_t acc = 0;
        for (int n1 = 0; n1 < static_cast<int>(N); ++n1) {
          b.row_offset.push_back(acc);
          const std::size_t L = std::min(n1 + b.span, static_cast<int>(N) - 1) - n1 + 1;
          acc += L * (L + 1) / 2;
        }
        b.size = acc;
      }
      offset += b.size;
      if (offset > state_budget)
        throw BasisTooLarge(std::to_string(offset) + "+ states exceed the budget of " +
                            std::to_string(state_budget));
      blocks_.push_back(std::move(b));
    }
    dimension_ = offset;
  }

  const LatticeSpec& lattice() const { return lattice_; }
  const std::vector<EmitterSpec>& emitters() const { return emitters_; }
  int total_excitations() const { return total_; }
  const TruncationRule& truncation() const { return truncation_; }
  std::size_t dimension() const { return dimension_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  const Block* find_block(std::uint32_t pattern) const {
    for (const auto& b : blocks_)
      if (b.pattern == pattern) return &b;
    return nullptr;
  }

  std::uint32_t all_excited_pattern() const { return (1u << emitters_.size()) - 1u; }

  // Index of a configuration, or -1 when it lies outside the truncated basis.
  std::int64_t index(const Configuration& c) const {
    const Block* b = find_block(c.pattern);
    if (!b || b->n_photons != c.n_photons) return -1;
    const auto r = rank_in_block(*b, c.sites);
    return r < 0 ? -1 : static_cast<std::int64_t>(b->offset) + r;
  }

  static std::int64_t rank_in_block(const Block& b, const std::array<int, 3>& s, int n_sites) {
    const std::int64_t N = n_sites;
    switch (b.n_photons) {
      case 0:
        return 0;
      case 1:
        return s[0];
      case 2:
        return static_cast<std::int64_t>(s[0]) * N - static_cast<std::int64_t>(s[0]) * (s[0] - 1) / 2 + (s[1] - s[0]);
      default: {
        if (s[2] - s[0] > b.span) return -1;
        const std::int64_t L = std::min<std::int64_t>(s[0] + b.span, N - 1) - s[0] + 1;
        const std::int64_t a = s[1] - s[0];
        return static_cast<std::int64_t>(b.row_offset[s[0]]) + a * L - a * (a - 1) / 2 + (s[2] - s[1]);
      }
    }
  }

  std::int64_t rank_in_block(const Block& b, const std::array<int, 3>& s) const {
    return rank_in_block(b, s, lattice_.n_sites);
  }

  Configuration config(std::size_t index) const {
    std::size_t bi = 0;
    while (bi + 1 < blocks_.size() && blocks_[bi + 1].offset <= index) ++bi;
    const Block& b = blocks_[bi];
    Configuration c;
    c.pattern = b.pattern;
    c.n_photons = b.n_photons;
    std::size_t r = index - b.offset;
    const std::size_t N = lattice_.n_sites;
    if (b.n_photons == 1) {
      c.sites[0] = static_cast<int>(r);
    } else if (b.n_photons == 2) {
      std::size_t n1 = 0, start = 0;
      while (start + (N - n1) <= r) start += N - n1++;
      c.sites[0] = static_cast<int>(n1);
      c.sites[1] = static_cast<int>(n1 + (r - start));
    } else if (b.n_photons == 3) {
      const auto it = std::upper_bound(b.row_offset.begin(), b.row_offset.end(), r);
      const std::size_t n1 = static_cast<std::size_t>(it - b.row_offset.begin()) - 1;
      std::size_t rem = r - b.row_offset[n1];
      const std::size_t L = std::min(n1 + b.span, N - 1) - n1 + 1;
      std::size_t a = 0;
      while (rem >= L - a) rem -= L - a++;
      c.sites[0] = static_cast<int>(n1);
      c.sites[1] = static_cast<int>(n1 + a);
      c.sites[2] = static_cast<int>(n1 + a + rem);
    }
    return c;
  }

  // Visits every configuration of a block in index order: f(index, configuration).
  template <class F>
  void for_each_in_block(const Block& b, F&& f) const {
    const int N = lattice_.n_sites;
    Configuration c;
    c.pattern = b.pattern;
    c.n_photons = b.n_photons;
    std::size_t idx = b.offset;
    if (b.n_photons == 0) {
      f(idx, c);
    } else if (b.n_photons == 1) {
      for (int n = 0; n < N; ++n) {
        c.sites[0] = n;
        f(idx++, c);
      }
    } else if (b.n_photons == 2) {
      for (int n1 = 0; n1 < N; ++n1)
        for (int n2 = n1; n2 < N; ++n2) {
          c.sites[0] = n1;
          c.sites[1] = n2;
          f(idx++, c);
        }
    } else {
      for (int n1 = 0; n1 < N; ++n1) {
        const int hi = std::min(n1 + b.span, N - 1);
        for (int n2 = n1; n2 <= hi; ++n2)
          for (int n3 = n2; n3 <= hi; ++n3) {
            c.sites = {n1, n2, n3};
            f(idx++, c);
          }
      }
    }
  }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& b : blocks_) for_each_in_block(b, f);
  }

  // Dimensions per photon number.
  std::array<std::size_t, 4> sector_dimensions() const {
    std::array<std::size_t, 4> d{0, 0, 0, 0};
    for (const auto& b : blocks_) d[b.n_photons] += b.size;
    return d;
  }

  // FNV-1a over everything that fixes the basis layout.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::int64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
      }
    };
    mix(lattice_.n_sites);
    mix(total_);
    mix(static_cast<std::int64_t>(emitters_.size()));
    mix(truncation_.max_pairwise_photon_spread.value_or(-1));
    for (const auto& b : blocks_) {
      mix(b.pattern);
      mix(b.n_photons);
      mix(static_cast<std::int64_t>(b.size));
    }
    return h;
  }

 private:
  LatticeSpec lattice_;
  std::vector<EmitterSpec> emitters_;
  int total_ = 0;
  TruncationRule truncation_;
  std::vector<Block> blocks_;
  std::size_t dimension_ = 0;
};

inline SectorBasis enumerate_basis(const LatticeSpec& lattice, const std::vector<EmitterSpec>& emitters,
                                   int total_excitations, TruncationRule truncation = {},
                                   std::size_t state_budget = kDefaultStateBudget) {
  return SectorBasis(lattice, emitters, total_excitations, truncation, state_budget);
}

}  // namespace wqed
