#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fqzkit/aligner.hpp"
#include "fqzkit/bytes.hpp"
#include "fqzkit/ref_index.hpp"

namespace fqzkit {

struct SegmentOptions {
    bool paired = false;
    bool reorder = false;
};

// Raw per-chunk field streams for the sequence side, in the order they are
// stored. Quality and name fields are assembled by the pipeline.
struct SequenceSegment {
    Bytes matched_flags;   // read_count bits; reorder appends the permutation
    Bytes pos_mode_flags;  // matched_count bits, 1 = delta coded
    Bytes pos_deltas;      // varints, delta-coded matched positions
    Bytes pos_absolutes;   // u64le, the rest
    Bytes strand_bits;     // matched_count bits, 1 = reverse
    Bytes read_lengths;    // varint per record
    Bytes bitmap;          // matched read bitmaps, bit-concatenated
    Bytes non_ref;         // exception bytes, concatenated
    Bytes non_ref_lengths; // varint per matched record
    Bytes unmatched;       // escape list plus 2-bit packed bases
    Bytes pair_swap_flags; // read_count/2 bits when paired, else empty
    uint32_t read_count = 0;
    uint32_t matched_count = 0;
};

// Mates are stored forward-first when that only takes swapping them. The
// swap is recorded per pair and undone on decompression.
bool swap_pair(const MapResult& r1, const MapResult& r2);

// Builds the field streams, mutating results in place: pairs may be swapped
// and, with reorder, records are permuted by mapped position so the quality
// and name fields built afterwards stay aligned with the stored order.
SequenceSegment build_sequence_segment(std::vector<MapResult>& results,
                                       const SegmentOptions& opt);

// Everything the pipeline needs back from a chunk's sequence fields, in
// stored order.
struct DecodedSequences {
    std::vector<std::string> seqs;
    std::vector<uint32_t> lengths;
    BitVec pair_swap; // empty unless paired
    uint32_t read_count = 0;
};

DecodedSequences decode_sequence_segment(const SequenceSegment& seg,
                                         const ForwardSequence& fseq,
                                         const SegmentOptions& opt);

} // namespace fqzkit
