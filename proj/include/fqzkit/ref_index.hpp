#ifndef FQZKIT_REF_INDEX_HPP
#define FQZKIT_REF_INDEX_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fqzkit/errors.hpp"

namespace fqzkit {

// All reference contigs concatenated into one sequence over {A,C,G,T}; every
// non-ACGT base of the input (N, ambiguity codes, anything else) becomes 'A'.
struct ForwardSequence {
    std::string bases;
    std::vector<std::pair<std::string, uint64_t>> source_boundaries;

    uint64_t checksum() const;
};

ForwardSequence build_forward_sequence(const std::string& fasta_path);

inline constexpr uint32_t kMinSeedLen = 11;
inline constexpr uint32_t kMaxSeedLen = 20;
inline constexpr uint64_t kInvalidSeed = ~uint64_t(0);

// Number of distinct seed ordinals for seed length k: the first base is fixed
// to 'G' and the second ranges over {A,C,T}, so 3 * 4^(k-2).
inline uint64_t seed_space(uint32_t k) {
    return 3ull << (2 * (k - 2));
}

// Maps the k bases at `seed` to an ordinal in [0, seed_space(k)), or
// kInvalidSeed when the window is not a valid seed (must start with 'G',
// second base must not be 'G', and only A/C/G/T may appear).
uint64_t seed_ordinal(const char* seed, uint32_t k);

// Range-index + forward-index pair over a ForwardSequence (positions of every
// valid seed, all occurrences kept). Immutable once built or loaded; safe to
// share read-only across threads.
struct SeedIndex {
    uint32_t k = 0;
    uint64_t ref_checksum = 0;
    std::vector<std::pair<std::string, uint64_t>> source_boundaries;
    // Cumulative occurrence counts, length seed_space(k)+1; range_index[0]==0
    // and range_index.back()==forward_index.size().
    std::vector<uint64_t> range_index;
    // Reference positions grouped by seed ordinal, ascending within a group.
    std::vector<uint64_t> forward_index;

    std::span<const uint64_t> lookup(uint64_t ordinal) const {
        const uint64_t* base = forward_index.data();
        return {base + range_index[ordinal], base + range_index[ordinal + 1]};
    }
};

SeedIndex build_index(const ForwardSequence& fseq, uint32_t k);

void save_index(const SeedIndex& index, const std::string& path);
SeedIndex load_index(const std::string& path);

// Throws ref_mismatch_error unless the index was built over this sequence.
void verify_index(const SeedIndex& index, const ForwardSequence& fseq);

} // namespace fqzkit

#endif
