#include "fqzkit/qual_segment.hpp"

#include <algorithm>
#include <cstdlib>

#include "fqzkit/errors.hpp"
#include "fqzkit/huffman.hpp"

namespace fqzkit {

namespace {

constexpr uint32_t kQualCodeMaxLen = 16;

void append_lossy_prefix(const QuantizerSpec& q, Bytes& out) {
    out.push_back(uint8_t(q.retained.size()));
    out.insert(out.end(), q.retained.begin(), q.retained.end());
}

// Dominant-score extraction: peel off the most frequent score as a bitmap
// while it covers at least half of the stream, up to kMaxDominantRounds
// times. Whatever is left goes out raw.
void encode_dominant(const Bytes& qual, QualitySegment& seg) {
    Bytes cur = qual;
    while (seg.dominant_rounds < kMaxDominantRounds) {
        if (cur.size() < 2) break;
        std::array<uint64_t, 256> freqs{};
        for (uint8_t b : cur) ++freqs[b];
        unsigned dom = 0;
        for (unsigned b = 1; b < 256; ++b)
            if (freqs[b] > freqs[dom]) dom = b;
        if (2 * freqs[dom] < cur.size()) break;

        BitVec bm;
        Bytes residual;
        for (uint8_t b : cur) {
            bool hit = b == dom;
            bm.push_back(hit);
            if (!hit) residual.push_back(b);
        }
        seg.main.insert(seg.main.end(), bm.bytes().begin(), bm.bytes().end());
        put_varint(seg.round_lengths, residual.size());
        seg.round_scores.push_back(uint8_t(dom));
        ++seg.dominant_rounds;
        cur = std::move(residual);
    }
    seg.remainder = std::move(cur);
}

Bytes decode_dominant(const Bytes& main, const Bytes& round_lengths,
                      const Bytes& round_scores, const Bytes& remainder,
                      unsigned rounds, uint64_t expected_total) {
    if (round_scores.size() != rounds)
        throw corruption_error("round score count does not match the header");
    ByteReader lens(round_lengths);
    std::vector<uint64_t> residual_len(rounds);
    for (unsigned i = 0; i < rounds; ++i) {
        residual_len[i] = lens.varint();
        if (residual_len[i] > expected_total)
            throw corruption_error("round residual larger than the stream");
    }
    if (!lens.at_end())
        throw corruption_error("trailing bytes after round lengths");

    // Input length of round i is the previous round's residual; round 0 sees
    // the whole stream.
    std::vector<uint64_t> input_len(rounds);
    for (unsigned i = 0; i < rounds; ++i)
        input_len[i] = i == 0 ? expected_total : residual_len[i - 1];

    uint64_t want_main = 0;
    for (unsigned i = 0; i < rounds; ++i) want_main += (input_len[i] + 7) / 8;
    if (main.size() != want_main)
        throw corruption_error("bitmap stream size does not match round lengths");
    uint64_t want_rem = rounds == 0 ? expected_total : residual_len[rounds - 1];
    if (remainder.size() != want_rem)
        throw corruption_error("quality remainder size does not match round lengths");

    // Per-round bitmap offsets into main, front to back.
    std::vector<size_t> bm_off(rounds);
    size_t off = 0;
    for (unsigned i = 0; i < rounds; ++i) {
        bm_off[i] = off;
        off += size_t((input_len[i] + 7) / 8);
    }

    // Replay rounds in reverse: the remainder is the innermost residual.
    Bytes cur = remainder;
    for (unsigned i = rounds; i-- > 0;) {
        Bytes out;
        out.reserve(size_t(input_len[i]));
        size_t zi = 0;
        const uint8_t* bm = main.data() + bm_off[i];
        for (uint64_t j = 0; j < input_len[i]; ++j) {
            bool bit = (bm[j / 8] >> (j % 8)) & 1u;
            if (bit) {
                out.push_back(round_scores[i]);
            } else {
                if (zi >= cur.size())
                    throw corruption_error("bitmap zeros exceed the residual");
                out.push_back(cur[zi++]);
            }
        }
        if (zi != cur.size())
            throw corruption_error("bitmap zeros do not cover the residual");
        cur = std::move(out);
    }
    return cur;
}

void encode_huffman(const Bytes& qual, QualitySegment& seg) {
    std::vector<uint64_t> freqs(256, 0);
    for (uint8_t b : qual) ++freqs[b];
    std::vector<uint8_t> lengths = huffman_code_lengths(freqs, kQualCodeMaxLen);
    std::vector<uint32_t> codes = canonical_codes(lengths);

    unsigned present = 0;
    for (uint8_t l : lengths)
        if (l != 0) ++present;
    // varint, not u8: a stream touching all 256 byte values is legal input.
    put_varint(seg.main, present);
    for (unsigned s = 0; s < 256; ++s) {
        if (lengths[s] == 0) continue;
        seg.main.push_back(uint8_t(s));
        seg.main.push_back(lengths[s]);
    }
    put_varint(seg.main, qual.size());
    BitWriter bw(seg.main);
    for (uint8_t b : qual) bw.put(codes[b], lengths[b]);
    bw.flush();
}

Bytes decode_huffman(ByteReader& in, uint64_t expected_total) {
    uint64_t present = in.varint();
    if (present > 256)
        throw corruption_error("code table larger than the byte alphabet");
    std::vector<uint8_t> lengths(256, 0);
    int prev = -1;
    for (unsigned k = 0; k < present; ++k) {
        uint8_t sym = in.u8();
        if (int(sym) <= prev)
            throw corruption_error("code table symbols out of order");
        prev = sym;
        lengths[sym] = in.u8();
        if (lengths[sym] == 0)
            throw corruption_error("code table lists a zero-length code");
    }
    uint64_t total = in.varint();
    if (total != expected_total)
        throw corruption_error("quality symbol count does not match read lengths");
    if (present == 0) {
        if (total != 0)
            throw corruption_error("empty code table with a nonempty stream");
        if (!in.at_end())
            throw corruption_error("trailing bytes after quality stream");
        return {};
    }

    HuffmanDecoder dec(lengths);
    MsbBitReader bits(in.raw(0), in.remaining());
    Bytes out;
    out.reserve(size_t(total));
    for (uint64_t i = 0; i < total; ++i) out.push_back(uint8_t(dec.decode(bits)));
    in.raw((bits.bits_read() + 7) / 8);
    if (!in.at_end())
        throw corruption_error("trailing bytes after quality stream");
    return out;
}

} // namespace

QuantizerSpec build_quantizer(const std::array<uint64_t, 256>& freqs, unsigned n_bins) {
    QuantizerSpec q;
    std::vector<unsigned> present;
    for (unsigned b = 0; b < 256; ++b)
        if (freqs[b] != 0) present.push_back(b);
    std::sort(present.begin(), present.end(), [&](unsigned a, unsigned b) {
        if (freqs[a] != freqs[b]) return freqs[a] > freqs[b];
        return a < b;
    });
    if (present.size() > n_bins) present.resize(n_bins);
    std::sort(present.begin(), present.end());
    for (unsigned b : present) q.retained.push_back(uint8_t(b));

    for (unsigned b = 0; b < 256; ++b) {
        if (q.retained.empty()) {
            q.mapping[b] = uint8_t(b);
            continue;
        }
        uint8_t best = q.retained[0];
        int best_d = std::abs(int(b) - int(best));
        for (uint8_t r : q.retained) {
            int d = std::abs(int(b) - int(r));
            if (d < best_d) {
                best = r;
                best_d = d;
            }
        }
        q.mapping[b] = best;
    }
    return q;
}

void apply_quantizer(const QuantizerSpec& q, Bytes& qual) {
    for (auto& b : qual) b = q.mapping[b];
}

QualitySegment build_quality_segment(const Bytes& qual, QualityMode mode, unsigned lossy_bins) {
    QualitySegment seg;
    Bytes work = qual;
    if (lossy_bins > 0) {
        std::array<uint64_t, 256> freqs{};
        for (uint8_t b : work) ++freqs[b];
        QuantizerSpec q = build_quantizer(freqs, lossy_bins);
        apply_quantizer(q, work);
        append_lossy_prefix(q, seg.main);
    }
    if (mode == QualityMode::dominant)
        encode_dominant(work, seg);
    else
        encode_huffman(work, seg);
    return seg;
}

Bytes decode_quality_segment(const Bytes& main, const Bytes& round_lengths,
                             const Bytes& round_scores, const Bytes& remainder,
                             QualityMode mode, unsigned lossy_bins,
                             unsigned dominant_rounds, uint64_t expected_total) {
    ByteReader in(main);
    if (lossy_bins > 0) {
        // The retained set is informational; decoding works from the coded
        // stream alone.
        uint8_t n = in.u8();
        in.raw(n);
    }
    if (mode == QualityMode::dominant) {
        if (dominant_rounds > kMaxDominantRounds)
            throw corruption_error("dominant round count out of range");
        Bytes bitmaps = in.bytes(in.remaining());
        return decode_dominant(bitmaps, round_lengths, round_scores, remainder,
                               dominant_rounds, expected_total);
    }
    if (dominant_rounds != 0 || !round_lengths.empty() || !round_scores.empty() ||
        !remainder.empty())
        throw corruption_error("round fields present outside dominant mode");
    return decode_huffman(in, expected_total);
}

} // namespace fqzkit
