#pragma once

#include <array>
#include <cstdint>

#include "fqzkit/bytes.hpp"

namespace fqzkit {

enum class QualityMode : uint8_t {
    huffman = 0,  // per-chunk prefix code over the raw scores
    dominant = 1, // iterated dominant-score bitmaps with a raw remainder
};

constexpr unsigned kMaxDominantRounds = 4;

// Lossy score binning. The n_bins most frequent scores are kept and every
// other score snaps to the nearest retained one. Ties (frequency and
// distance alike) resolve toward the smaller byte so the mapping is
// deterministic.
struct QuantizerSpec {
    Bytes retained; // ascending
    std::array<uint8_t, 256> mapping{};
};

QuantizerSpec build_quantizer(const std::array<uint64_t, 256>& freqs, unsigned n_bins);
void apply_quantizer(const QuantizerSpec& q, Bytes& qual);

// The four field streams a chunk stores for quality data. `main` holds the
// prefix-code blob (huffman mode) or the concatenated per-round bitmaps
// (dominant mode), with a retained-set prefix in front when lossy binning is
// on. Rounds are described by one varint (residual length) and one score
// byte each; the final residual is stored raw in `remainder`.
struct QualitySegment {
    Bytes main;
    Bytes round_lengths;
    Bytes round_scores;
    Bytes remainder;
    uint8_t dominant_rounds = 0;
};

// qual is the concatenation of every record's quality string in stored
// order; per-read lengths live in the read-length field, so this module only
// sees one byte stream. lossy_bins == 0 means lossless.
QualitySegment build_quality_segment(const Bytes& qual, QualityMode mode, unsigned lossy_bins);

Bytes decode_quality_segment(const Bytes& main, const Bytes& round_lengths,
                             const Bytes& round_scores, const Bytes& remainder,
                             QualityMode mode, unsigned lossy_bins,
                             unsigned dominant_rounds, uint64_t expected_total);

} // namespace fqzkit
