#include "fqzkit/aligner.hpp"

#include <algorithm>
#include <array>
#include <cassert>

#include "fqzkit/errors.hpp"

namespace fqzkit {

namespace {

constexpr std::array<char, 256> make_complement() {
    std::array<char, 256> t{};
    for (size_t i = 0; i < 256; ++i) t[i] = char(i);
    t['A'] = 'T';
    t['T'] = 'A';
    t['C'] = 'G';
    t['G'] = 'C';
    return t;
}
constexpr auto kComplement = make_complement();

} // namespace

std::string reverse_complement(std::string_view seq) {
    std::string out(seq.size(), '\0');
    for (size_t i = 0; i < seq.size(); ++i)
        out[seq.size() - 1 - i] = kComplement[uint8_t(seq[i])];
    return out;
}

uint64_t hamming_distance(std::string_view a, std::string_view b) {
    assert(a.size() == b.size());
    uint64_t d = 0;
    for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

Alignment local_align(std::string_view read, std::string_view window) {
    const size_t n = read.size();
    const size_t m = window.size();
    assert(m >= n);
    Alignment out;
    if (n == 0) return out;

    // Full unit-cost DP. Row 0 charges leading deletions so the alignment is
    // anchored at the window start; the answer row is scanned for the free
    // window suffix. Matrices stay small (reads are short), so no banding.
    std::vector<uint32_t> d((n + 1) * (m + 1));
    const size_t stride = m + 1;
    for (size_t j = 0; j <= m; ++j) d[j] = uint32_t(j);
    for (size_t i = 1; i <= n; ++i) {
        d[i * stride] = uint32_t(i);
        const char ri = read[i - 1];
        for (size_t j = 1; j <= m; ++j) {
            uint32_t best = d[(i - 1) * stride + j - 1] + (ri != window[j - 1]);
            uint32_t up = d[(i - 1) * stride + j] + 1;
            uint32_t left = d[i * stride + j - 1] + 1;
            if (up < best) best = up;
            if (left < best) best = left;
            d[i * stride + j] = best;
        }
    }

    // Largest j among the minima. The smaller-j ties are alignments that end
    // in insertions, which encode worse and can leave the cigar starting
    // with one after a traceback near the left edge.
    size_t jstar = 0;
    uint32_t dist = d[n * stride];
    for (size_t j = 1; j <= m; ++j) {
        if (d[n * stride + j] <= dist) {
            dist = d[n * stride + j];
            jstar = j;
        }
    }
    out.distance = dist;

    // Traceback preference: deletion, then diagonal, then insertion. Taking
    // the deletion first places indels at the rightmost equivalent read
    // position, next to the base the record anchors on.
    std::vector<CigarRun> rev;
    auto push = [&rev](CigarOp op) {
        if (!rev.empty() && rev.back().op == op)
            ++rev.back().len;
        else
            rev.push_back({op, 1});
    };
    size_t i = n, j = jstar;
    while (i > 0 || j > 0) {
        uint32_t here = d[i * stride + j];
        if (j > 0 && here == d[i * stride + j - 1] + 1) {
            push(CigarOp::del);
            --j;
        } else if (i > 0 && j > 0 &&
                   here == d[(i - 1) * stride + j - 1] + (read[i - 1] != window[j - 1])) {
            push(CigarOp::match);
            --i;
            --j;
        } else {
            assert(i > 0);
            push(CigarOp::insert);
            --i;
        }
    }
    out.cigar.assign(rev.rbegin(), rev.rend());
    return out;
}

std::vector<Candidate> find_candidates(const std::string& read, const SeedIndex& index,
                                       const ForwardSequence& fseq, const AlignParams& params) {
    std::vector<Candidate> out;
    const uint32_t k = index.k;
    const uint64_t len = read.size();
    const uint64_t ref_len = fseq.bases.size();
    if (len <= k) return out;

    struct Vote {
        uint64_t start;
        uint32_t count;
        // Which read halves the supporting seeds came from. An indel shifts
        // the implied start of every seed on its far side, so only a start
        // confirmed from both halves proves the read maps without one.
        bool from_low;
        bool from_high;
    };

    std::string rc;
    std::vector<Vote> votes;
    for (int orient = 0; orient < 2; ++orient) {
        const bool reverse = orient == 1;
        if (reverse) rc = reverse_complement(read);
        const char* r = reverse ? rc.data() : read.data();

        votes.clear();
        // Probe seed offsets from both ends toward the middle. Reads cut
        // cleanly from the reference confirm one start from both ends within
        // a couple of probes; reads whose ends disagree (an indel between
        // them) fall through to the full scan so each end's anchor collects
        // its votes and both become candidates.
        const uint32_t n_offsets = uint32_t(len) - k + 1;
        const uint32_t half = n_offsets / 2;
        uint32_t lo = 0, hi = n_offsets - 1;
        bool take_lo = true;
        bool settled = false;
        for (uint32_t t = 0; t < n_offsets && !settled; ++t) {
            uint32_t o = take_lo ? lo++ : hi--;
            take_lo = !take_lo;
            uint64_t ordinal = seed_ordinal(r + o, k);
            if (ordinal == kInvalidSeed) continue;
            for (uint64_t p : index.lookup(ordinal)) {
                if (p < o) continue;
                uint64_t implied = p - o;
                if (implied + len > ref_len) continue;
                auto it = std::find_if(votes.begin(), votes.end(),
                                       [implied](const Vote& v) { return v.start == implied; });
                if (it == votes.end()) {
                    votes.push_back({implied, 1, o < half, o >= half});
                    continue;
                }
                ++it->count;
                it->from_low = it->from_low || o < half;
                it->from_high = it->from_high || o >= half;
                if (it->count >= 2 && it->from_low && it->from_high) settled = true;
            }
        }

        size_t first = out.size();
        for (const Vote& v : votes)
            if (v.count >= 2) out.push_back({v.start, reverse, v.count});
        std::sort(out.begin() + first, out.end(), [](const Candidate& a, const Candidate& b) {
            if (a.votes != b.votes) return a.votes > b.votes;
            return a.ref_start < b.ref_start;
        });
        if (out.size() - first > params.max_candidates) out.resize(first + params.max_candidates);
    }
    return out;
}

std::optional<MapResult> encode_map_result(const std::string& read, const Candidate& cand,
                                           const ForwardSequence& fseq, const AlignParams& params) {
    const size_t len = read.size();
    const uint64_t ref_len = fseq.bases.size();
    if (len == 0 || cand.ref_start + len > ref_len) return std::nullopt;

    const std::string oriented = cand.reverse ? reverse_complement(read) : read;
    const char* r = oriented.data();
    const char* ref = fseq.bases.data();

    MapResult mr;
    mr.matched = true;
    mr.reverse = cand.reverse;
    mr.ref_start = cand.ref_start;
    mr.read_len = uint32_t(len);

    const uint64_t max_ham = uint64_t(double(len) * params.max_hamming_frac);
    uint64_t ham = hamming_distance(oriented, std::string_view(ref + cand.ref_start, len));
    if (ham <= max_ham) {
        for (size_t i = 0; i < len; ++i) {
            bool match = r[i] == ref[cand.ref_start + i];
            mr.bitmap.push_back(match);
            if (!match) mr.non_ref.push_back(uint8_t(r[i]));
        }
        return mr;
    }

    const uint64_t max_ed = uint64_t(double(len) * params.max_edit_frac);
    if (max_ed == 0) return std::nullopt;

    const uint64_t slack = uint64_t(double(len) * params.window_slack_frac);
    const uint64_t wend = std::min<uint64_t>(ref_len, cand.ref_start + len + slack);
    const size_t wlen = size_t(wend - cand.ref_start);
    if (wlen < len) return std::nullopt;

    Alignment al = local_align(oriented, std::string_view(ref + cand.ref_start, wlen));
    if (al.distance > max_ed) return std::nullopt;

    std::vector<CigarRun> cigar = std::move(al.cigar);
    uint64_t start = cand.ref_start;
    // A leading deletion just means the read really starts further right.
    if (!cigar.empty() && cigar.front().op == CigarOp::del) {
        start += cigar.front().len;
        cigar.erase(cigar.begin());
    }
    if (!cigar.empty() && cigar.back().op == CigarOp::del) cigar.pop_back();
    // A leading insertion has no prior read base to anchor its record on.
    if (cigar.empty() || cigar.front().op != CigarOp::match) return std::nullopt;
    mr.ref_start = start;

    size_t i = 0;
    uint64_t p = start;
    bool prev_match_run = false;
    bool last_pos_emitted = false;
    for (const CigarRun& run : cigar) {
        if (run.op == CigarOp::match) {
            for (uint32_t t = 0; t < run.len; ++t) {
                bool match = r[i] == ref[p];
                mr.bitmap.push_back(match);
                if (!match) mr.non_ref.push_back(uint8_t(r[i]));
                last_pos_emitted = !match;
                ++i;
                ++p;
            }
            prev_match_run = true;
            continue;
        }
        // Indel record, anchored on read position i-1. Optimal unit-cost
        // paths never put two indel runs back to back, so the anchor is
        // always the tail of a match run.
        if (!prev_match_run || i == 0) return std::nullopt;
        if (last_pos_emitted) mr.non_ref.pop_back();
        mr.bitmap.set(mr.bitmap.size() - 1, false);
        mr.non_ref.push_back(run.op == CigarOp::del ? 'D' : 'I');
        put_varint(mr.non_ref, uint64_t(run.len) + 1);
        mr.non_ref.push_back(uint8_t(r[i - 1]));
        if (run.op == CigarOp::del) {
            p += run.len;
        } else {
            for (uint32_t t = 0; t < run.len; ++t) {
                mr.non_ref.push_back(uint8_t(r[i + t]));
                mr.bitmap.push_back(false);
            }
            i += run.len;
        }
        prev_match_run = false;
        last_pos_emitted = false;
    }
    assert(i == len);
    assert(mr.bitmap.size() == len);
    assert(p <= wend);
    return mr;
}

std::string decode_mapped_read(const ForwardSequence& fseq, uint64_t ref_start, bool strand,
                               const BitVec& bits, size_t& bit_pos, ByteReader& non_ref,
                               size_t read_len) {
    const uint64_t ref_len = fseq.bases.size();
    if (bit_pos + read_len > bits.size()) throw corruption_error("bitmap stream exhausted");

    std::string out;
    out.reserve(read_len);
    uint64_t j = ref_start;
    auto ref_base = [&]() {
        if (j >= ref_len) throw corruption_error("mapped read runs past the reference end");
        return fseq.bases[size_t(j++)];
    };
    while (out.size() < read_len) {
        if (bits[bit_pos++]) {
            out.push_back(ref_base());
            continue;
        }
        uint8_t b = non_ref.peek_u8();
        if (b == 'I' || b == 'D') {
            non_ref.u8();
            uint64_t v = non_ref.varint();
            if (v < 2) throw corruption_error("indel record carries length below 2");
            char anchor = char(non_ref.u8());
            if (j >= ref_len) throw corruption_error("mapped read runs past the reference end");
            out.push_back(anchor);
            ++j;
            if (b == 'D') {
                j += v - 1;
                if (j > ref_len) throw corruption_error("deletion skips past the reference end");
            } else {
                if (out.size() + (v - 1) > read_len)
                    throw corruption_error("insertion record overruns the read length");
                for (uint64_t t = 1; t < v; ++t) out.push_back(char(non_ref.u8()));
                bit_pos += size_t(v - 1);
            }
        } else {
            if (j >= ref_len) throw corruption_error("mapped read runs past the reference end");
            out.push_back(char(non_ref.u8()));
            ++j;
        }
    }
    return strand ? reverse_complement(out) : out;
}

std::string reconstruct_read(const ForwardSequence& fseq, uint64_t ref_start, bool strand,
                             const BitVec& bitmap, const Bytes& non_ref, size_t read_len) {
    ByteReader reader(non_ref);
    size_t bit_pos = 0;
    std::string out = decode_mapped_read(fseq, ref_start, strand, bitmap, bit_pos, reader, read_len);
    if (!reader.at_end()) throw corruption_error("trailing bytes after exception records");
    return out;
}

MapResult align_read(const std::string& read, const SeedIndex& index, const ForwardSequence& fseq,
                     const AlignParams& params) {
    for (const Candidate& cand : find_candidates(read, index, fseq, params)) {
        if (auto mr = encode_map_result(read, cand, fseq, params)) return std::move(*mr);
    }
    MapResult mr;
    mr.read_len = uint32_t(read.size());
    mr.raw_seq = read;
    return mr;
}

} // namespace fqzkit
