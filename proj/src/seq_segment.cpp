#include "fqzkit/seq_segment.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "fqzkit/errors.hpp"

namespace fqzkit {

namespace {

// Positions delta-code against the previous matched read when the gap fits
// comfortably in a short varint; anything else (including backward jumps)
// falls back to an absolute position.
constexpr uint64_t kDeltaLimit = 1ull << 16;

// Sanity cap applied when parsing read lengths, to keep a corrupt varint
// from driving allocations.
constexpr uint64_t kMaxReadLen = 1u << 28;

uint8_t base_code(char c) {
    switch (c) {
    case 'A':
    case 'N': // N is packed as A and restored through the escape list
        return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    }
    throw std::logic_error("invalid base in unmatched read");
}

constexpr char kCodeBase[4] = {'A', 'C', 'G', 'T'};

BitVec bitvec_field(const Bytes& raw, size_t nbits, const char* what) {
    if (raw.size() != (nbits + 7) / 8)
        throw corruption_error(std::string(what) + " stream size mismatch");
    return BitVec::from_bytes(raw, nbits);
}

} // namespace

bool swap_pair(const MapResult& r1, const MapResult& r2) {
    return r1.matched && r2.matched && r1.reverse && !r2.reverse;
}

SequenceSegment build_sequence_segment(std::vector<MapResult>& results,
                                       const SegmentOptions& opt) {
    if (opt.paired && results.size() % 2 != 0)
        throw std::logic_error("paired segment with an odd record count");
    const uint32_t rc = uint32_t(results.size());
    SequenceSegment seg;
    seg.read_count = rc;

    std::vector<bool> swapped;
    if (opt.paired) {
        swapped.resize(results.size() / 2, false);
        for (size_t p = 0; p < swapped.size(); ++p) {
            if (swap_pair(results[2 * p], results[2 * p + 1])) {
                std::swap(results[2 * p], results[2 * p + 1]);
                swapped[p] = true;
            }
        }
    }

    // perm[stored] = original record index. Identity unless reordering.
    std::vector<uint32_t> perm(rc);
    std::iota(perm.begin(), perm.end(), 0u);
    if (opt.reorder && rc > 0) {
        const uint32_t unit = opt.paired ? 2 : 1;
        const uint32_t n_units = rc / unit;
        auto unit_key = [&](uint32_t u) -> uint64_t {
            for (uint32_t k = 0; k < unit; ++k) {
                const MapResult& r = results[size_t(u) * unit + k];
                if (r.matched) return r.ref_start;
            }
            return UINT64_MAX;
        };
        std::vector<uint32_t> order(n_units);
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
            return unit_key(a) < unit_key(b);
        });
        std::vector<MapResult> stored;
        stored.reserve(rc);
        perm.clear();
        for (uint32_t u : order) {
            for (uint32_t k = 0; k < unit; ++k) {
                perm.push_back(u * unit + k);
                stored.push_back(std::move(results[size_t(u) * unit + k]));
            }
        }
        results = std::move(stored);
    }

    BitVec matched_bits;
    for (const MapResult& r : results) matched_bits.push_back(r.matched);
    seg.matched_flags = matched_bits.bytes();
    if (opt.reorder)
        for (uint32_t v : perm) put_varint(seg.matched_flags, v);

    if (opt.paired) {
        BitVec swap_bits;
        for (size_t p = 0; p < results.size() / 2; ++p)
            swap_bits.push_back(swapped[perm[2 * p] / 2]);
        seg.pair_swap_flags = swap_bits.bytes();
    }

    BitVec pos_mode;
    BitVec strands;
    BitVec bitmap_bits;
    bool have_prev = false;
    uint64_t prev_pos = 0;
    for (const MapResult& r : results) {
        put_varint(seg.read_lengths, r.read_len);
        if (!r.matched) continue;
        ++seg.matched_count;
        strands.push_back(r.reverse);
        uint64_t p = r.ref_start;
        if (have_prev && p >= prev_pos && p - prev_pos < kDeltaLimit) {
            pos_mode.push_back(true);
            put_varint(seg.pos_deltas, p - prev_pos);
        } else {
            pos_mode.push_back(false);
            put_u64(seg.pos_absolutes, p);
        }
        prev_pos = p;
        have_prev = true;
        for (size_t i = 0; i < r.bitmap.size(); ++i) bitmap_bits.push_back(r.bitmap[i]);
        seg.non_ref.insert(seg.non_ref.end(), r.non_ref.begin(), r.non_ref.end());
        put_varint(seg.non_ref_lengths, r.non_ref.size());
    }
    seg.pos_mode_flags = pos_mode.bytes();
    seg.strand_bits = strands.bytes();
    seg.bitmap = bitmap_bits.bytes();

    // Unmatched reads travel verbatim: N positions as (ordinal, offset)
    // escapes, then every base packed two bits per symbol, LSB first.
    std::vector<const std::string*> un;
    for (const MapResult& r : results)
        if (!r.matched) un.push_back(&r.raw_seq);
    Bytes escapes;
    uint64_t n_esc = 0;
    for (size_t ord = 0; ord < un.size(); ++ord) {
        const std::string& s = *un[ord];
        for (size_t off = 0; off < s.size(); ++off) {
            if (s[off] == 'N') {
                put_varint(escapes, ord);
                put_varint(escapes, off);
                ++n_esc;
            }
        }
    }
    put_varint(seg.unmatched, n_esc);
    seg.unmatched.insert(seg.unmatched.end(), escapes.begin(), escapes.end());
    uint8_t acc = 0;
    unsigned shift = 0;
    for (const std::string* s : un) {
        for (char c : *s) {
            acc |= uint8_t(base_code(c) << shift);
            shift += 2;
            if (shift == 8) {
                seg.unmatched.push_back(acc);
                acc = 0;
                shift = 0;
            }
        }
    }
    if (shift != 0) seg.unmatched.push_back(acc);

    return seg;
}

DecodedSequences decode_sequence_segment(const SequenceSegment& seg,
                                         const ForwardSequence& fseq,
                                         const SegmentOptions& opt) {
    const uint32_t rc = seg.read_count;
    const uint32_t mc = seg.matched_count;
    if (mc > rc) throw corruption_error("matched count exceeds read count");
    if (opt.paired && rc % 2 != 0)
        throw corruption_error("paired chunk with an odd read count");

    const size_t mf_bytes = (size_t(rc) + 7) / 8;
    if (seg.matched_flags.size() < mf_bytes)
        throw corruption_error("matched flag stream truncated");
    BitVec matched = BitVec::from_bytes(
        Bytes(seg.matched_flags.begin(), seg.matched_flags.begin() + mf_bytes), rc);
    {
        ByteReader rest(seg.matched_flags.data() + mf_bytes,
                        seg.matched_flags.size() - mf_bytes);
        if (opt.reorder) {
            // The permutation is recorded for tooling; decompression keeps
            // the stored order, so we only validate it here.
            std::vector<bool> seen(rc, false);
            for (uint32_t i = 0; i < rc; ++i) {
                uint64_t v = rest.varint();
                if (v >= rc || seen[size_t(v)])
                    throw corruption_error("stored permutation is not a permutation");
                seen[size_t(v)] = true;
            }
        }
        if (!rest.at_end())
            throw corruption_error("trailing bytes after matched flags");
    }
    uint32_t mc_check = 0;
    for (uint32_t i = 0; i < rc; ++i)
        if (matched[i]) ++mc_check;
    if (mc_check != mc)
        throw corruption_error("matched flags disagree with the matched count");

    DecodedSequences out;
    out.read_count = rc;
    out.lengths.reserve(rc);
    {
        ByteReader in(seg.read_lengths);
        for (uint32_t i = 0; i < rc; ++i) {
            uint64_t len = in.varint();
            if (len > kMaxReadLen)
                throw corruption_error("read length out of range");
            out.lengths.push_back(uint32_t(len));
        }
        if (!in.at_end())
            throw corruption_error("trailing bytes after read lengths");
    }

    BitVec pos_mode = bitvec_field(seg.pos_mode_flags, mc, "position mode");
    BitVec strands = bitvec_field(seg.strand_bits, mc, "strand");
    if (opt.paired)
        out.pair_swap = bitvec_field(seg.pair_swap_flags, rc / 2, "pair swap");
    else if (!seg.pair_swap_flags.empty())
        throw corruption_error("pair swap flags in an unpaired archive");

    std::vector<uint64_t> positions(mc);
    {
        ByteReader deltas(seg.pos_deltas);
        ByteReader absolutes(seg.pos_absolutes);
        uint64_t prev = 0;
        bool have_prev = false;
        for (uint32_t m = 0; m < mc; ++m) {
            if (pos_mode[m]) {
                if (!have_prev)
                    throw corruption_error("delta position with no predecessor");
                uint64_t d = deltas.varint();
                if (d >= kDeltaLimit)
                    throw corruption_error("position delta out of range");
                positions[m] = prev + d;
            } else {
                positions[m] = absolutes.u64();
            }
            prev = positions[m];
            have_prev = true;
        }
        if (!deltas.at_end() || !absolutes.at_end())
            throw corruption_error("trailing bytes after positions");
    }

    uint64_t total_bits = 0;
    for (uint32_t i = 0; i < rc; ++i)
        if (matched[i]) total_bits += out.lengths[i];
    if (seg.bitmap.size() != (total_bits + 7) / 8)
        throw corruption_error("bitmap stream size mismatch");
    BitVec bits = BitVec::from_bytes(seg.bitmap, size_t(total_bits));

    const uint32_t n_un = rc - mc;
    std::vector<std::string> un_seqs;
    {
        ByteReader in(seg.unmatched);
        uint64_t n_esc = in.varint();
        if (n_esc > (1ull << 32))
            throw corruption_error("escape count out of range");
        std::vector<std::pair<uint64_t, uint64_t>> escapes(static_cast<size_t>(n_esc));
        for (auto& e : escapes) {
            e.first = in.varint();
            e.second = in.varint();
        }
        std::vector<uint32_t> un_len;
        un_len.reserve(n_un);
        for (uint32_t i = 0; i < rc; ++i)
            if (!matched[i]) un_len.push_back(out.lengths[i]);
        uint64_t total_bases = 0;
        for (uint32_t l : un_len) total_bases += l;
        if (in.remaining() != (2 * total_bases + 7) / 8)
            throw corruption_error("unmatched base stream size mismatch");
        const uint8_t* packed = in.raw(in.remaining());
        un_seqs.reserve(n_un);
        uint64_t j = 0;
        for (uint32_t u = 0; u < n_un; ++u) {
            std::string s(un_len[u], 'A');
            for (uint32_t k = 0; k < un_len[u]; ++k, ++j)
                s[k] = kCodeBase[(packed[j / 4] >> (2 * (j % 4))) & 3];
            un_seqs.push_back(std::move(s));
        }
        for (const auto& e : escapes) {
            if (e.first >= n_un || e.second >= un_seqs[size_t(e.first)].size())
                throw corruption_error("escape position out of range");
            un_seqs[size_t(e.first)][size_t(e.second)] = 'N';
        }
    }

    ByteReader non_ref(seg.non_ref);
    ByteReader nr_lens(seg.non_ref_lengths);
    size_t bit_pos = 0;
    uint32_t m = 0;
    uint32_t u = 0;
    out.seqs.reserve(rc);
    for (uint32_t i = 0; i < rc; ++i) {
        if (matched[i]) {
            uint64_t p = positions[m];
            if (p > fseq.bases.size())
                throw corruption_error("mapped position outside the reference");
            uint64_t want_nr = nr_lens.varint();
            size_t before = non_ref.pos();
            std::string s = decode_mapped_read(fseq, p, strands[m], bits, bit_pos,
                                               non_ref, out.lengths[i]);
            if (non_ref.pos() - before != want_nr)
                throw corruption_error("exception bytes disagree with their recorded length");
            out.seqs.push_back(std::move(s));
            ++m;
        } else {
            out.seqs.push_back(std::move(un_seqs[u]));
            ++u;
        }
    }
    if (!nr_lens.at_end() || !non_ref.at_end())
        throw corruption_error("trailing exception bytes");
    if (bit_pos != bits.size())
        throw corruption_error("trailing bitmap bits");
    return out;
}

} // namespace fqzkit
