#include "fqzkit/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <stdexcept>

#include "fqzkit/bwt.hpp"
#include "fqzkit/errors.hpp"
#include "fqzkit/huffman.hpp"

namespace fqzkit {

namespace {

// Upper bound accepted for any declared decoded size. Field streams are far
// smaller in practice; this only exists to stop a corrupt varint from turning
// into a giant allocation.
constexpr uint64_t kMaxDecodedLen = 1ull << 32;

constexpr size_t kBwtBlockSize = 4u << 20;
constexpr uint32_t kBwtCodeMaxLen = 31;

uint64_t read_decoded_len(ByteReader& in) {
    uint64_t n = in.varint();
    if (n > kMaxDecodedLen)
        throw corruption_error("declared stream size out of range");
    return n;
}

// ---- run-length codec ------------------------------------------------------

void rle_encode(const Bytes& raw, Bytes& out) {
    size_t i = 0;
    while (i < raw.size()) {
        size_t j = i + 1;
        while (j < raw.size() && raw[j] == raw[i]) ++j;
        out.push_back(raw[i]);
        put_varint(out, j - i);
        i = j;
    }
}

Bytes rle_decode(ByteReader& in, uint64_t raw_len) {
    Bytes out;
    out.reserve(size_t(raw_len));
    while (out.size() < raw_len) {
        uint8_t v = in.u8();
        uint64_t run = in.varint();
        if (run == 0 || run > raw_len - out.size())
            throw corruption_error("run length overruns the declared size");
        out.insert(out.end(), size_t(run), v);
    }
    if (!in.at_end()) throw corruption_error("trailing bytes after run data");
    return out;
}

// ---- deflate ----------------------------------------------------------------

void deflate_encode(const Bytes& raw, int level, Bytes& out) {
    uLongf cap = compressBound(uLong(raw.size()));
    size_t base = out.size();
    out.resize(base + cap);
    int rc = compress2(out.data() + base, &cap, raw.data(), uLong(raw.size()), level);
    if (rc != Z_OK) throw std::runtime_error("deflate failed");
    out.resize(base + cap);
}

Bytes deflate_decode(ByteReader& in, uint64_t raw_len) {
    Bytes out(static_cast<size_t>(raw_len));
    uLongf got = uLongf(raw_len);
    size_t n = in.remaining();
    int rc = uncompress(out.data(), &got, in.raw(n), uLong(n));
    if (rc != Z_OK || got != raw_len)
        throw corruption_error("deflate payload is corrupt");
    return out;
}

// ---- block-sorting chain -----------------------------------------------------
//
// Per 4 MB block: BWT, move-to-front, zero-run coding, canonical prefix codes.
// Zero runs use bijective base 2 over two run symbols, so a run of r zeros
// costs about log2(r) symbols. MTF values v > 0 map to symbol v + 1, leaving
// 0 and 1 for the run symbols; the alphabet tops out at 257.
//
// Each block opens with a mode byte. Mode 0 is the chain above; mode 1 skips
// the transforms and emits prefix codes straight over the block bytes, which
// wins on near-iid data where move-to-front only scrambles the statistics.
// The encoder builds both and keeps the smaller.

void mtf_encode(Bytes& data) {
    std::array<uint8_t, 256> order;
    for (unsigned i = 0; i < 256; ++i) order[i] = uint8_t(i);
    for (auto& b : data) {
        uint8_t v = b;
        unsigned idx = 0;
        while (order[idx] != v) ++idx;
        std::memmove(&order[1], &order[0], idx);
        order[0] = v;
        b = uint8_t(idx);
    }
}

void mtf_decode(Bytes& data) {
    std::array<uint8_t, 256> order;
    for (unsigned i = 0; i < 256; ++i) order[i] = uint8_t(i);
    for (auto& b : data) {
        unsigned idx = b;
        uint8_t v = order[idx];
        std::memmove(&order[1], &order[0], idx);
        order[0] = v;
        b = v;
    }
}

constexpr uint16_t kRunA = 0;
constexpr uint16_t kRunB = 1;

std::vector<uint16_t> zrle_encode(const Bytes& mtf) {
    std::vector<uint16_t> sym;
    sym.reserve(mtf.size() / 2 + 16);
    size_t i = 0;
    while (i < mtf.size()) {
        if (mtf[i] == 0) {
            uint64_t r = 0;
            while (i < mtf.size() && mtf[i] == 0) {
                ++r;
                ++i;
            }
            while (r > 0) {
                if (r & 1) {
                    sym.push_back(kRunA);
                    r = (r - 1) >> 1;
                } else {
                    sym.push_back(kRunB);
                    r = (r - 2) >> 1;
                }
            }
        } else {
            sym.push_back(uint16_t(mtf[i]) + 1);
            ++i;
        }
    }
    return sym;
}

// Code table for a symbol histogram; alpha is the highest present symbol + 1.
struct BlockCodes {
    std::vector<uint8_t> lengths;
    std::vector<uint32_t> codes;
    uint16_t alpha = 0;
};

BlockCodes build_block_codes(const std::vector<uint64_t>& freqs) {
    BlockCodes bc;
    bc.lengths = huffman_code_lengths(freqs, kBwtCodeMaxLen);
    bc.codes = canonical_codes(bc.lengths);
    for (size_t s = 0; s < bc.lengths.size(); ++s)
        if (bc.lengths[s] != 0) bc.alpha = uint16_t(s + 1);
    return bc;
}

void bwt_encode_block(const uint8_t* p, size_t n, Bytes& out) {
    // Mode 0: the full chain.
    Bytes sorted;
    {
        BwtBlock fw = bwt_forward(p, n);
        mtf_encode(fw.data);
        std::vector<uint16_t> syms = zrle_encode(fw.data);

        std::vector<uint64_t> freqs(257, 0);
        for (uint16_t s : syms) ++freqs[s];
        BlockCodes bc = build_block_codes(freqs);

        sorted.push_back(0);
        put_u32(sorted, fw.primary);
        put_u16(sorted, bc.alpha);
        for (uint16_t s = 0; s < bc.alpha; ++s) sorted.push_back(bc.lengths[s]);
        put_varint(sorted, syms.size());
        BitWriter bw(sorted);
        for (uint16_t s : syms) bw.put(bc.codes[s], bc.lengths[s]);
        bw.flush();
    }

    // Mode 1: prefix codes over the block as-is. The symbol count equals the
    // block length, so it is not stored.
    Bytes plain;
    {
        std::vector<uint64_t> freqs(256, 0);
        for (size_t i = 0; i < n; ++i) ++freqs[p[i]];
        BlockCodes bc = build_block_codes(freqs);

        plain.push_back(1);
        put_u16(plain, bc.alpha);
        for (uint16_t s = 0; s < bc.alpha; ++s) plain.push_back(bc.lengths[s]);
        BitWriter bw(plain);
        for (size_t i = 0; i < n; ++i) bw.put(bc.codes[p[i]], bc.lengths[p[i]]);
        bw.flush();
    }

    put_varint(out, n);
    const Bytes& win = plain.size() < sorted.size() ? plain : sorted;
    out.insert(out.end(), win.begin(), win.end());
}

void bwt_decode_block(ByteReader& in, Bytes& out) {
    uint64_t block_len = in.varint();
    if (block_len == 0 || block_len > kBwtBlockSize)
        throw corruption_error("block size out of range");
    uint8_t mode = in.u8();
    if (mode > 1)
        throw corruption_error("unknown block coding mode");

    if (mode == 1) {
        uint16_t alpha = in.u16();
        if (alpha == 0 || alpha > 256)
            throw corruption_error("block alphabet out of range");
        std::vector<uint8_t> lengths(alpha);
        for (auto& l : lengths) l = in.u8();
        HuffmanDecoder dec(lengths);
        MsbBitReader bits(in.raw(0), in.remaining());
        size_t base = out.size();
        out.resize(base + size_t(block_len));
        for (uint64_t k = 0; k < block_len; ++k)
            out[base + size_t(k)] = uint8_t(dec.decode(bits));
        in.raw((bits.bits_read() + 7) / 8);
        return;
    }

    uint32_t primary = in.u32();
    uint16_t alpha = in.u16();
    if (alpha == 0 || alpha > 257)
        throw corruption_error("block alphabet out of range");
    std::vector<uint8_t> lengths(alpha);
    for (auto& l : lengths) l = in.u8();
    HuffmanDecoder dec(lengths);
    uint64_t n_sym = in.varint();
    // Zero-run coding never expands, so the symbol count is bounded by the
    // block size.
    if (n_sym > block_len)
        throw corruption_error("block symbol count out of range");

    const uint8_t* packed = in.raw(0);
    MsbBitReader bits(packed, in.remaining());

    Bytes mtf;
    mtf.reserve(size_t(block_len));
    uint64_t run = 0;
    uint64_t base = 1;
    auto flush_run = [&] {
        if (run == 0) return;
        if (run > block_len - mtf.size())
            throw corruption_error("zero run overruns the block");
        mtf.insert(mtf.end(), size_t(run), 0);
        run = 0;
        base = 1;
    };
    for (uint64_t k = 0; k < n_sym; ++k) {
        uint32_t s = dec.decode(bits);
        if (s <= kRunB) {
            run += (s == kRunA ? 1 : 2) * base;
            base <<= 1;
            if (run > block_len)
                throw corruption_error("zero run overruns the block");
        } else {
            flush_run();
            if (mtf.size() >= block_len)
                throw corruption_error("block expanded past its declared size");
            mtf.push_back(uint8_t(s - 1));
        }
    }
    flush_run();
    if (mtf.size() != block_len)
        throw corruption_error("block expanded to the wrong size");

    in.raw((bits.bits_read() + 7) / 8);

    mtf_decode(mtf);
    Bytes plain = bwt_inverse(mtf, primary);
    out.insert(out.end(), plain.begin(), plain.end());
}

void bwt_chain_encode(const Bytes& raw, Bytes& out) {
    put_varint(out, raw.size());
    for (size_t off = 0; off < raw.size(); off += kBwtBlockSize) {
        size_t n = std::min(kBwtBlockSize, raw.size() - off);
        bwt_encode_block(raw.data() + off, n, out);
    }
}

Bytes bwt_chain_decode(ByteReader& in) {
    uint64_t raw_len = read_decoded_len(in);
    Bytes out;
    out.reserve(size_t(raw_len));
    while (out.size() < raw_len) bwt_decode_block(in, out);
    if (out.size() != raw_len || !in.at_end())
        throw corruption_error("block stream does not match its declared size");
    return out;
}

// ---- context-mixing coder ----------------------------------------------------
//
// Bitwise binary arithmetic coder driven by a mix of order-0/1/2 predictors.
// Everything is integer arithmetic so encoder and decoder agree bit for bit
// across platforms; the logistic curve is a fixed interpolation table.

int cm_squash(int d) {
    static const int tbl[33] = {
        1,    2,    3,    6,    10,   16,   27,   45,   73,   120,  194,
        310,  488,  747,  1101, 1546, 2047, 2549, 2994, 3348, 3607, 3785,
        3901, 3975, 4024, 4050, 4068, 4079, 4085, 4089, 4092, 4093, 4094};
    if (d >= 2047) return 4095;
    if (d <= -2047) return 1;
    int w = d & 127;
    d = (d >> 7) + 16;
    return (tbl[d] * (128 - w) + tbl[d + 1] * w + 64) >> 7;
}

struct CmStretchTable {
    int16_t t[4096];
    CmStretchTable() {
        int pi = 0;
        for (int x = -2047; x <= 2047; ++x) {
            int v = cm_squash(x);
            while (pi <= v && pi < 4096) t[pi++] = int16_t(x);
        }
        while (pi < 4096) t[pi++] = 2047;
    }
};

int cm_stretch(int p) {
    static const CmStretchTable tab;
    return tab.t[p];
}

class CmModel {
public:
    CmModel() : o1_(1u << 16, 2048), o2_(1u << 22, 2048) {
        o0_.fill(2048);
        for (auto& ws : weights_) ws = {21845, 21845, 21845};
    }

    // Probability that the next bit is 1, scaled to [1, 4095].
    int predict() {
        idx0_ = ctx_;
        idx1_ = (uint32_t(prev1_) << 8) | ctx_;
        idx2_ = hash_o2() & ((1u << 22) - 1);
        st_[0] = cm_stretch(o0_[idx0_]);
        st_[1] = cm_stretch(o1_[idx1_]);
        st_[2] = cm_stretch(o2_[idx2_]);
        const std::array<int32_t, 3>& w = weights_[ctx_];
        int64_t dot = int64_t(w[0]) * st_[0] + int64_t(w[1]) * st_[1] +
                      int64_t(w[2]) * st_[2];
        int m = int(dot >> 16);
        m = std::clamp(m, -2047, 2047);
        p_ = std::clamp(cm_squash(m), 1, 4095);
        return p_;
    }

    void update(int bit) {
        int err = (bit << 12) - p_;
        std::array<int32_t, 3>& w = weights_[ctx_];
        for (int i = 0; i < 3; ++i) {
            w[i] += (st_[i] * err) >> 10;
            w[i] = std::clamp(w[i], -(1 << 20), 1 << 20);
        }
        adapt(o0_[idx0_], bit, 5);
        adapt(o1_[idx1_], bit, 4);
        adapt(o2_[idx2_], bit, 4);
        ctx_ = (ctx_ << 1) | unsigned(bit);
        if (ctx_ >= 256) {
            prev2_ = prev1_;
            prev1_ = uint8_t(ctx_);
            ctx_ = 1;
        }
    }

private:
    static void adapt(uint16_t& p, int bit, int rate) {
        p = uint16_t(int(p) + (((bit << 12) - int(p)) >> rate));
    }

    uint32_t hash_o2() const {
        uint32_t h = uint32_t(prev1_) * 0x9E3779B1u;
        h ^= uint32_t(prev2_) * 0x85EBCA6Bu;
        h ^= ctx_ * 0xC2B2AE35u;
        return h ^ (h >> 15);
    }

    std::array<uint16_t, 256> o0_;
    std::vector<uint16_t> o1_;
    std::vector<uint16_t> o2_;
    // One weight set per partial-byte context, so each bit position of a byte
    // mixes with its own weights.
    std::array<std::array<int32_t, 3>, 256> weights_;
    uint32_t ctx_ = 1; // partial byte with a leading marker bit
    uint8_t prev1_ = 0;
    uint8_t prev2_ = 0;
    uint32_t idx0_ = 0, idx1_ = 0, idx2_ = 0;
    int st_[3] = {0, 0, 0};
    int p_ = 2048;
};

class CmEncoder {
public:
    explicit CmEncoder(Bytes& out) : out_(out) {}

    void encode(int bit, int p) {
        uint32_t xmid = x1_ + uint32_t((uint64_t(x2_ - x1_) * uint32_t(p)) >> 12);
        if (bit)
            x2_ = xmid;
        else
            x1_ = xmid + 1;
        while (((x1_ ^ x2_) >> 24) == 0) {
            out_.push_back(uint8_t(x2_ >> 24));
            x1_ <<= 8;
            x2_ = (x2_ << 8) | 0xFF;
        }
    }

    void flush() {
        for (int i = 0; i < 4; ++i) {
            out_.push_back(uint8_t(x1_ >> 24));
            x1_ <<= 8;
        }
    }

private:
    Bytes& out_;
    uint32_t x1_ = 0;
    uint32_t x2_ = 0xFFFFFFFFu;
};

class CmDecoder {
public:
    CmDecoder(const uint8_t* data, size_t size) : data_(data), size_(size) {
        for (int i = 0; i < 4; ++i) x_ = (x_ << 8) | next();
    }

    int decode(int p) {
        uint32_t xmid = x1_ + uint32_t((uint64_t(x2_ - x1_) * uint32_t(p)) >> 12);
        int bit = x_ <= xmid ? 1 : 0;
        if (bit)
            x2_ = xmid;
        else
            x1_ = xmid + 1;
        while (((x1_ ^ x2_) >> 24) == 0) {
            x1_ <<= 8;
            x2_ = (x2_ << 8) | 0xFF;
            x_ = (x_ << 8) | next();
        }
        return bit;
    }

    size_t consumed() const { return pos_; }

private:
    uint8_t next() {
        if (pos_ >= size_)
            throw corruption_error("arithmetic stream truncated");
        return data_[pos_++];
    }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
    uint32_t x1_ = 0;
    uint32_t x2_ = 0xFFFFFFFFu;
    uint32_t x_ = 0;
};

void cm_encode(const Bytes& raw, Bytes& out) {
    put_varint(out, raw.size());
    CmEncoder enc(out);
    CmModel model;
    for (uint8_t b : raw) {
        for (int k = 7; k >= 0; --k) {
            int bit = (b >> k) & 1;
            enc.encode(bit, model.predict());
            model.update(bit);
        }
    }
    enc.flush();
}

Bytes cm_decode(ByteReader& in) {
    uint64_t raw_len = read_decoded_len(in);
    size_t n = in.remaining();
    CmDecoder dec(in.raw(n), n);
    CmModel model;
    Bytes out;
    out.reserve(size_t(raw_len));
    for (uint64_t i = 0; i < raw_len; ++i) {
        unsigned b = 0;
        for (int k = 0; k < 8; ++k) {
            int bit = dec.decode(model.predict());
            model.update(bit);
            b = (b << 1) | unsigned(bit);
        }
        out.push_back(uint8_t(b));
    }
    // The encoder emits exactly as many bytes as the decoder consumes, so a
    // remainder can only mean the stream was tampered with.
    if (dec.consumed() != n)
        throw corruption_error("trailing bytes after arithmetic stream");
    return out;
}

double nominal_mb_per_s(CodecId id) {
    switch (id) {
    case CodecId::store: return 4000.0;
    case CodecId::rle: return 1500.0;
    case CodecId::fast_general: return 150.0;
    case CodecId::strong_bwt: return 30.0;
    case CodecId::strong_cm: return 10.0;
    }
    return 1.0;
}

} // namespace

const char* codec_name(CodecId id) {
    switch (id) {
    case CodecId::store: return "store";
    case CodecId::rle: return "rle";
    case CodecId::fast_general: return "fast-general";
    case CodecId::strong_bwt: return "strong-bwt";
    case CodecId::strong_cm: return "strong-cm";
    }
    return "unknown";
}

const std::vector<CodecSpec>& codec_registry() {
    static const std::vector<CodecSpec> specs = {
        {CodecId::store, 0},        {CodecId::rle, 0},
        {CodecId::fast_general, 6}, {CodecId::strong_bwt, 0},
        {CodecId::strong_cm, 0},
    };
    return specs;
}

uint8_t pack_codec(CodecSpec spec) {
    return uint8_t((uint8_t(spec.id) << 4) | (spec.level & 0x0F));
}

CodecSpec unpack_codec(uint8_t byte) {
    uint8_t id = byte >> 4;
    if (id >= kCodecCount)
        throw corruption_error("unknown codec id in chunk header");
    return {CodecId(id), uint8_t(byte & 0x0F)};
}

Bytes encode_stream(const Bytes& raw, CodecSpec spec) {
    if (raw.empty()) return {};
    switch (spec.id) {
    case CodecId::store:
        return raw;
    case CodecId::rle: {
        Bytes out;
        put_varint(out, raw.size());
        rle_encode(raw, out);
        return out;
    }
    case CodecId::fast_general: {
        int level = spec.level == 0 ? 6 : std::min<int>(spec.level, 9);
        Bytes out;
        put_varint(out, raw.size());
        deflate_encode(raw, level, out);
        return out;
    }
    case CodecId::strong_bwt: {
        Bytes out;
        bwt_chain_encode(raw, out);
        return out;
    }
    case CodecId::strong_cm: {
        Bytes out;
        cm_encode(raw, out);
        return out;
    }
    }
    throw std::logic_error("unknown codec id");
}

Bytes decode_stream(const Bytes& coded, CodecSpec spec) {
    if (coded.empty()) return {};
    switch (spec.id) {
    case CodecId::store:
        return coded;
    case CodecId::rle: {
        ByteReader in(coded);
        uint64_t raw_len = read_decoded_len(in);
        return rle_decode(in, raw_len);
    }
    case CodecId::fast_general: {
        ByteReader in(coded);
        uint64_t raw_len = read_decoded_len(in);
        return deflate_decode(in, raw_len);
    }
    case CodecId::strong_bwt: {
        ByteReader in(coded);
        return bwt_chain_decode(in);
    }
    case CodecId::strong_cm: {
        ByteReader in(coded);
        return cm_decode(in);
    }
    }
    throw std::logic_error("unknown codec id");
}

Bytes maybe_encode(const Bytes& raw, CodecSpec& spec) {
    Bytes coded = encode_stream(raw, spec);
    if (spec.id != CodecId::store && coded.size() >= raw.size()) {
        spec = {CodecId::store, 0};
        return raw;
    }
    return coded;
}

double codec_score(double compression_ratio, double time_cost) {
    return compression_ratio / (1.0 + 0.1 * time_cost);
}

CodecSpec choose_codec(const Bytes& raw) {
    const std::vector<CodecSpec>& reg = codec_registry();
    CodecSpec best = reg.front();
    double best_score = -1.0;
    for (CodecSpec spec : reg) {
        Bytes coded = encode_stream(raw, spec);
        // maybe_encode stores anything that fails to shrink, so an expanding
        // trial is only ever as good as store.
        size_t effective = std::min(coded.size(), raw.size());
        double cr = raw.empty()
                        ? 1.0
                        : double(raw.size()) / double(std::max<size_t>(effective, 1));
        // Time cost is normalized to seconds per megabyte at a nominal rate
        // for the codec tier, so small fields do not all drift to the
        // heaviest codec.
        double t = 1.0 / nominal_mb_per_s(spec.id);
        double s = codec_score(cr, t);
        if (s > best_score) {
            best_score = s;
            best = spec;
        }
    }
    return best;
}

FieldPlan select_plan(const std::vector<Bytes>& fields) {
    FieldPlan plan;
    plan.reserve(fields.size());
    for (const Bytes& f : fields) plan.push_back(choose_codec(f));
    return plan;
}

} // namespace fqzkit
