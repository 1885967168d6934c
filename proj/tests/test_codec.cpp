#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fqzkit/codec.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "fqzkit/bwt.hpp"
#include "fqzkit/errors.hpp"
#include "fqzkit/huffman.hpp"
#include "support/corpus.hpp"

using namespace fqzkit;

namespace {

Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

Bytes random_bytes(testkit::Rng& rng, size_t n) {
    Bytes out(n);
    for (auto& b : out) b = uint8_t(rng.below(256));
    return out;
}

// Low-entropy byte soup: a few symbols with long-ish runs, the regime the
// block-sorting chain is built for.
Bytes runny_bytes(testkit::Rng& rng, size_t n) {
    Bytes out;
    out.reserve(n);
    const char* pool = "AAACCGT#";
    while (out.size() < n) {
        uint8_t v = uint8_t(pool[rng.below(8)]);
        size_t run = 1 + rng.below(20);
        for (size_t i = 0; i < run && out.size() < n; ++i) out.push_back(v);
    }
    return out;
}

std::vector<int32_t> naive_suffix_array(const Bytes& s) {
    std::vector<int32_t> sa(s.size());
    std::iota(sa.begin(), sa.end(), 0);
    std::sort(sa.begin(), sa.end(), [&](int32_t a, int32_t b) {
        return std::lexicographical_compare(s.begin() + a, s.end(), s.begin() + b, s.end());
    });
    return sa;
}

struct NaiveBwt {
    Bytes data;
    uint32_t primary = 0;
};

// Rotation-matrix definition of the transform, on the sentinel-extended
// string. Quadratic, fine for oracle-sized inputs.
NaiveBwt naive_bwt(const Bytes& s) {
    const size_t n = s.size();
    std::vector<int> t(n + 1);
    for (size_t i = 0; i < n; ++i) t[i] = int(s[i]) + 1;
    t[n] = 0;
    std::vector<std::vector<int>> rows;
    rows.reserve(n + 1);
    for (size_t r = 0; r <= n; ++r) {
        std::vector<int> row(n + 1);
        for (size_t c = 0; c <= n; ++c) row[c] = t[(r + c) % (n + 1)];
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end());
    NaiveBwt out;
    for (size_t r = 0; r <= n; ++r) {
        int last = rows[r].back();
        if (last == 0)
            out.primary = uint32_t(r);
        else
            out.data.push_back(uint8_t(last - 1));
    }
    return out;
}

} // namespace

TEST_CASE("suffix array matches a naive suffix sort") {
    CHECK(suffix_array(nullptr, 0).empty());

    std::vector<Bytes> cases = {
        to_bytes("a"),
        to_bytes("banana"),
        to_bytes("mississippi"),
        to_bytes("aaaaaaaaaa"),
        to_bytes("abababab"),
        Bytes{0x00, 0x00, 0x01, 0x00},
        Bytes{0xFF, 0x00, 0xFF, 0x00, 0xFF},
    };
    testkit::Rng rng(31);
    for (int i = 0; i < 120; ++i) cases.push_back(random_bytes(rng, 1 + rng.below(400)));
    for (int i = 0; i < 60; ++i) cases.push_back(runny_bytes(rng, 1 + rng.below(400)));

    for (const Bytes& s : cases) {
        std::vector<int32_t> got = suffix_array(s.data(), s.size());
        REQUIRE(got == naive_suffix_array(s));
    }
}

TEST_CASE("forward BWT matches the rotation-matrix definition") {
    testkit::Rng rng(32);
    std::vector<Bytes> cases = {to_bytes("banana"), to_bytes("a"), Bytes{0x00},
                                to_bytes("aaaa"), Bytes{0xFF, 0x00, 0x7F}};
    for (int i = 0; i < 80; ++i) cases.push_back(random_bytes(rng, 1 + rng.below(300)));
    for (int i = 0; i < 40; ++i) cases.push_back(runny_bytes(rng, 1 + rng.below(300)));

    for (const Bytes& s : cases) {
        BwtBlock got = bwt_forward(s.data(), s.size());
        NaiveBwt want = naive_bwt(s);
        REQUIRE(got.data == want.data);
        REQUIRE(got.primary == want.primary);
        REQUIRE(got.primary >= 1);
        REQUIRE(got.primary <= s.size());
        REQUIRE(bwt_inverse(got.data, got.primary) == s);
    }
}

TEST_CASE("BWT inverse rejects broken blocks") {
    Bytes s = to_bytes("the quick brown fox jumps over the lazy dog");
    BwtBlock fw = bwt_forward(s.data(), s.size());
    CHECK_THROWS_AS(bwt_inverse(fw.data, 0), corruption_error);
    CHECK_THROWS_AS(bwt_inverse(fw.data, uint32_t(fw.data.size()) + 1), corruption_error);
    CHECK(bwt_inverse({}, 7).empty());
}

TEST_CASE("huffman lengths are Kraft-tight and canonical codes roundtrip") {
    testkit::Rng rng(33);
    for (int iter = 0; iter < 40; ++iter) {
        size_t nsym = 2 + rng.below(80);
        std::vector<uint64_t> freqs(nsym);
        size_t present = 0;
        for (auto& f : freqs) {
            if (rng.chance(1, 4)) continue; // leave some symbols absent
            f = 1 + rng.below(100000);
            ++present;
        }
        if (present < 2) {
            freqs[0] = 5;
            freqs[1] = 9;
        }

        // Keep the cap feasible; 2^7 exceeds the symbol count above.
        uint32_t max_len = 7 + uint32_t(rng.below(9));
        std::vector<uint8_t> lengths = huffman_code_lengths(freqs, max_len);
        REQUIRE(lengths.size() == nsym);

        uint64_t kraft = 0; // in units of 2^-32
        for (size_t i = 0; i < nsym; ++i) {
            if (freqs[i] == 0) {
                REQUIRE(lengths[i] == 0);
                continue;
            }
            REQUIRE(lengths[i] >= 1);
            REQUIRE(lengths[i] <= max_len);
            kraft += 1ull << (32 - lengths[i]);
        }
        REQUIRE(kraft == (1ull << 32));

        std::vector<uint32_t> codes = canonical_codes(lengths);
        std::vector<uint32_t> text;
        for (int i = 0; i < 500; ++i) {
            uint32_t sym = uint32_t(rng.below(nsym));
            if (freqs[sym] == 0) continue;
            text.push_back(sym);
        }
        Bytes packed;
        BitWriter bw(packed);
        for (uint32_t sym : text) bw.put(codes[sym], lengths[sym]);
        bw.flush();
        HuffmanDecoder dec(lengths);
        MsbBitReader br(packed.data(), packed.size());
        for (uint32_t sym : text) REQUIRE(dec.decode(br) == sym);
    }

    // A lone symbol still gets a 1-bit code and must decode.
    std::vector<uint64_t> lone(10);
    lone[7] = 42;
    auto lengths = huffman_code_lengths(lone, 15);
    CHECK(lengths[7] == 1);
    HuffmanDecoder dec(lengths);
    Bytes packed{0x00};
    MsbBitReader br(packed.data(), packed.size());
    CHECK(dec.decode(br) == 7);

    // A deep cap forces a balanced tree; an impossible one must be refused
    // rather than spinning in the flattening loop.
    std::vector<uint64_t> wide(40, 1);
    wide[0] = 1u << 30;
    auto capped = huffman_code_lengths(wide, 6);
    for (uint8_t l : capped) CHECK(l <= 6);
    CHECK_THROWS_AS(huffman_code_lengths(wide, 5), std::invalid_argument);
}

TEST_CASE("codec registry and wire byte") {
    const auto& reg = codec_registry();
    REQUIRE(reg.size() >= kCodecCount);
    CHECK(reg.front().id == CodecId::store);

    CHECK(std::string(codec_name(CodecId::store)) == "store");
    CHECK(std::string(codec_name(CodecId::rle)) == "rle");
    CHECK(std::string(codec_name(CodecId::fast_general)) == "fast-general");
    CHECK(std::string(codec_name(CodecId::strong_bwt)) == "strong-bwt");
    CHECK(std::string(codec_name(CodecId::strong_cm)) == "strong-cm");

    CHECK(pack_codec({CodecId::fast_general, 6}) == 0x26);
    CHECK(pack_codec({CodecId::store, 0}) == 0x00);
    for (unsigned id = 0; id < kCodecCount; ++id) {
        for (unsigned level = 0; level < 16; ++level) {
            CodecSpec spec{CodecId(id), uint8_t(level)};
            CHECK(unpack_codec(pack_codec(spec)) == spec);
        }
    }
    CHECK_THROWS_AS(unpack_codec(uint8_t(kCodecCount << 4)), corruption_error);
    CHECK_THROWS_AS(unpack_codec(0xF0), corruption_error);
}

TEST_CASE("every codec roundtrips every corpus") {
    testkit::Rng rng(34);
    std::vector<Bytes> corpora = {
        {},
        {0x42},
        random_bytes(rng, 10000),
        runny_bytes(rng, 50000),
        to_bytes(std::string(10000, 'q')),
    };
    // Quality-like text, the dominant field content in practice.
    corpora.push_back(to_bytes(testkit::skewed_quality(rng, 40000)));

    for (const Bytes& raw : corpora) {
        for (CodecSpec spec : codec_registry()) {
            Bytes coded = encode_stream(raw, spec);
            if (raw.empty()) CHECK(coded.empty());
            REQUIRE(decode_stream(coded, spec) == raw);
        }
    }
}

TEST_CASE("non-store streams declare their decoded size") {
    Bytes raw = to_bytes("abcabcabcabc");
    CHECK(encode_stream(raw, {CodecId::store, 0}) == raw);
    for (CodecId id : {CodecId::rle, CodecId::fast_general}) {
        Bytes coded = encode_stream(raw, {id, 0});
        ByteReader in(coded);
        CHECK(in.varint() == raw.size());
    }
}

TEST_CASE("RLE crushes constant data") {
    Bytes zeros(10000, 0x00);
    Bytes coded = encode_stream(zeros, {CodecId::rle, 0});
    CHECK(coded.size() < 100);
    CHECK(decode_stream(coded, {CodecId::rle, 0}) == zeros);
}

TEST_CASE("block-sorting codec spans multiple blocks") {
    testkit::Rng rng(35);
    Bytes big = runny_bytes(rng, (4u << 20) + 12345);
    Bytes coded = encode_stream(big, {CodecId::strong_bwt, 0});
    CHECK(coded.size() < big.size() / 2);
    REQUIRE(decode_stream(coded, {CodecId::strong_bwt, 0}) == big);
}

TEST_CASE("decoders reject tampered streams") {
    testkit::Rng rng(36);
    Bytes raw = runny_bytes(rng, 20000);

    for (CodecId id :
         {CodecId::rle, CodecId::fast_general, CodecId::strong_bwt, CodecId::strong_cm}) {
        CodecSpec spec{id, 0};
        Bytes coded = encode_stream(raw, spec);
        Bytes cut(coded.begin(), coded.begin() + coded.size() / 2);
        CHECK_THROWS_AS(decode_stream(cut, spec), corruption_error);
    }

    // Inflated declared size.
    Bytes rle = encode_stream(raw, {CodecId::rle, 0});
    {
        ByteReader in(rle);
        uint64_t n = in.varint();
        Bytes swollen;
        put_varint(swollen, n + 7);
        size_t rest = in.remaining();
        const uint8_t* p = in.raw(rest);
        swollen.insert(swollen.end(), p, p + rest);
        CHECK_THROWS_AS(decode_stream(swollen, {CodecId::rle, 0}), corruption_error);
    }

    // Zero-length run, unreachable from the encoder.
    {
        Bytes bogus;
        put_varint(bogus, 2);
        bogus.push_back(0x41);
        put_varint(bogus, 0);
        CHECK_THROWS_AS(decode_stream(bogus, {CodecId::rle, 0}), corruption_error);
    }

    // Trailing garbage after a complete stream.
    for (CodecId id : {CodecId::rle, CodecId::strong_cm}) {
        CodecSpec spec{id, 0};
        Bytes coded = encode_stream(raw, spec);
        coded.push_back(0x00);
        CHECK_THROWS_AS(decode_stream(coded, spec), corruption_error);
    }

    // Absurd declared size must be rejected before any allocation.
    {
        Bytes bogus;
        put_varint(bogus, (1ull << 32) + 1);
        bogus.push_back(0x00);
        CHECK_THROWS_AS(decode_stream(bogus, {CodecId::fast_general, 0}), corruption_error);
    }
}

TEST_CASE("codec scoring prefers cheap codecs on ties") {
    CHECK(codec_score(2.5, 0.0) == doctest::Approx(2.5));
    CHECK(codec_score(2.0, 5.0) == doctest::Approx(2.0 / 1.5));
    CHECK(codec_score(1.0, 0.1) < codec_score(1.0, 0.0));

    testkit::Rng rng(37);
    // Incompressible input: every trial ties at ratio 1, the fastest tier
    // (store) must win.
    Bytes noise = random_bytes(rng, 65536);
    CHECK(choose_codec(noise).id == CodecId::store);

    // Constant input: rle reaches essentially the same ratio ceiling as the
    // strong tiers at a fraction of the cost.
    Bytes flat(100000, 0x11);
    CHECK(choose_codec(flat).id == CodecId::rle);
}

TEST_CASE("select_plan picks a working codec per field") {
    testkit::Rng rng(38);
    std::vector<Bytes> fields = {
        Bytes{},
        random_bytes(rng, 4096),
        Bytes(20000, 0x00),
        runny_bytes(rng, 30000),
    };
    FieldPlan plan = select_plan(fields);
    REQUIRE(plan.size() == fields.size());
    CHECK(plan[2].id == CodecId::rle);
    for (size_t i = 0; i < fields.size(); ++i) {
        CodecSpec spec = plan[i];
        Bytes coded = maybe_encode(fields[i], spec);
        CHECK(decode_stream(coded, spec) == fields[i]);
        if (!fields[i].empty() && spec.id != CodecId::store)
            CHECK(coded.size() < fields[i].size());
    }
}

TEST_CASE("maybe_encode falls back to store on expansion") {
    testkit::Rng rng(39);
    Bytes noise = random_bytes(rng, 3000);
    CodecSpec spec{CodecId::fast_general, 0};
    Bytes coded = maybe_encode(noise, spec);
    CHECK(spec.id == CodecId::store);
    CHECK(coded == noise);

    Bytes flat(3000, 0x55);
    spec = {CodecId::rle, 0};
    coded = maybe_encode(flat, spec);
    CHECK(spec.id == CodecId::rle);
    CHECK(coded.size() < 20);
}
