#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fqzkit/bytes.hpp"
#include "fqzkit/ref_index.hpp"

namespace fqzkit {

struct AlignParams {
    // Accept a candidate on Hamming distance alone when it is at most
    // read_len * max_hamming_frac. Otherwise fall back to local alignment
    // and accept up to read_len * max_edit_frac edits.
    double max_hamming_frac = 1.0 / 8.0;
    double max_edit_frac = 1.0 / 4.0;
    // The alignment window extends read_len * window_slack_frac past the
    // candidate start to leave room for deletions.
    double window_slack_frac = 0.25;
    uint32_t max_candidates = 4;
};

struct Candidate {
    uint64_t ref_start = 0;
    bool reverse = false;
    uint32_t votes = 0;
};

// Per-read alignment outcome. Quality and name ride along so a chunk can be
// segmented from one vector without keeping the source records around.
struct MapResult {
    bool matched = false;
    bool reverse = false;
    uint64_t ref_start = 0;
    uint32_t read_len = 0;
    BitVec bitmap;        // one bit per read base, only when matched
    Bytes non_ref;        // exception bytes, only when matched
    std::string raw_seq;  // original bases, only when not matched
    std::string qual;
    std::string name;     // "name comment" joined, empty when names are dropped
};

enum class CigarOp : uint8_t { match, insert, del };

struct CigarRun {
    CigarOp op;
    uint32_t len;
};

struct Alignment {
    uint64_t distance = 0;
    std::vector<CigarRun> cigar;
};

std::string reverse_complement(std::string_view seq);

uint64_t hamming_distance(std::string_view a, std::string_view b);

// Semi-global alignment of read against window, anchored at the window start.
// The read is consumed entirely; any window suffix is free. Unit costs.
Alignment local_align(std::string_view read, std::string_view window);

// Seed-consensus candidate search. Forward candidates come first, each
// orientation sorted by vote count descending then ref_start ascending and
// capped at params.max_candidates.
std::vector<Candidate> find_candidates(const std::string& read, const SeedIndex& index,
                                       const ForwardSequence& fseq, const AlignParams& params);

// Try one candidate. Returns a matched MapResult (bitmap + non_ref filled,
// qual/name left empty) or nullopt when both the Hamming check and local
// alignment reject it.
std::optional<MapResult> encode_map_result(const std::string& read, const Candidate& cand,
                                           const ForwardSequence& fseq, const AlignParams& params);

// Streaming inverse of the bitmap/non_ref encoding. Consumes read_len bits
// from bits starting at bit_pos and whatever non_ref bytes the exceptions
// need; both cursors are advanced. The returned read is oriented (strand
// already applied).
std::string decode_mapped_read(const ForwardSequence& fseq, uint64_t ref_start, bool strand,
                               const BitVec& bits, size_t& bit_pos, ByteReader& non_ref,
                               size_t read_len);

// Convenience wrapper over a single read's own bitmap/non_ref.
std::string reconstruct_read(const ForwardSequence& fseq, uint64_t ref_start, bool strand,
                             const BitVec& bitmap, const Bytes& non_ref, size_t read_len);

// Full per-read procedure: candidates in order, first accepted encoding wins.
MapResult align_read(const std::string& read, const SeedIndex& index, const ForwardSequence& fseq,
                     const AlignParams& params);

} // namespace fqzkit
