#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fqzkit/seq_segment.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "fqzkit/errors.hpp"
#include "support/corpus.hpp"

using namespace fqzkit;

namespace {

// The segment code never looks at qual, so tests stash the expected sequence
// there and compare against it after the roundtrip.
MapResult matched_at(const ForwardSequence& fseq, uint64_t pos, uint32_t len, bool rev) {
    MapResult r;
    r.matched = true;
    r.reverse = rev;
    r.ref_start = pos;
    r.read_len = len;
    for (uint32_t i = 0; i < len; ++i) r.bitmap.push_back(true);
    std::string extract = fseq.bases.substr(size_t(pos), len);
    r.qual = rev ? reverse_complement(extract) : extract;
    return r;
}

MapResult unmatched_read(std::string seq) {
    MapResult r;
    r.read_len = uint32_t(seq.size());
    r.qual = seq;
    r.raw_seq = std::move(seq);
    return r;
}

void check_roundtrip(std::vector<MapResult>& results, const ForwardSequence& fseq,
                     const SegmentOptions& opt) {
    SequenceSegment seg = build_sequence_segment(results, opt);
    DecodedSequences dec = decode_sequence_segment(seg, fseq, opt);
    REQUIRE(dec.read_count == results.size());
    REQUIRE(dec.seqs.size() == results.size());
    for (size_t i = 0; i < results.size(); ++i) {
        REQUIRE(dec.seqs[i] == results[i].qual);
        REQUIRE(dec.lengths[i] == results[i].read_len);
    }
}

} // namespace

TEST_CASE("pairs are swapped only when that makes them forward-first") {
    MapResult fwd;
    fwd.matched = true;
    MapResult rev;
    rev.matched = true;
    rev.reverse = true;
    MapResult un;

    CHECK(swap_pair(rev, fwd));
    CHECK_FALSE(swap_pair(fwd, rev));
    CHECK_FALSE(swap_pair(fwd, fwd));
    CHECK_FALSE(swap_pair(rev, rev));
    CHECK_FALSE(swap_pair(un, fwd));
    CHECK_FALSE(swap_pair(rev, un));
    CHECK_FALSE(swap_pair(un, un));
}

TEST_CASE("field streams are laid out byte for byte as documented") {
    testkit::Rng rng(51);
    ForwardSequence fseq;
    fseq.bases = testkit::random_dna(rng, 300);

    std::vector<MapResult> results;
    results.push_back(matched_at(fseq, 100, 5, false));
    results.push_back(unmatched_read("ACGTN"));
    results.push_back(matched_at(fseq, 140, 4, true));
    results.push_back(matched_at(fseq, 90, 4, false)); // backward jump
    std::vector<std::string> want_seqs;
    for (const auto& r : results) want_seqs.push_back(r.qual);

    SegmentOptions opt;
    SequenceSegment seg = build_sequence_segment(results, opt);

    CHECK(seg.read_count == 4);
    CHECK(seg.matched_count == 3);
    // Matched bits 1,0,1,1 packed LSB first.
    CHECK(seg.matched_flags == Bytes{0x0D});
    CHECK(seg.read_lengths == Bytes{5, 5, 4, 4});
    // Positions 100, 140, 90: absolute, delta 40, absolute (backward).
    CHECK(seg.pos_mode_flags == Bytes{0x02});
    CHECK(seg.pos_deltas == Bytes{40});
    {
        Bytes want_abs;
        put_u64(want_abs, 100);
        put_u64(want_abs, 90);
        CHECK(seg.pos_absolutes == want_abs);
    }
    CHECK(seg.strand_bits == Bytes{0x02});
    // 13 match bits, all ones.
    CHECK(seg.bitmap == Bytes{0xFF, 0x1F});
    CHECK(seg.non_ref.empty());
    CHECK(seg.non_ref_lengths == Bytes{0, 0, 0});
    // One escape (read 0, offset 4), then ACGTN packed two bits a base with
    // N travelling as A.
    CHECK(seg.unmatched == Bytes{0x01, 0x00, 0x04, 0xE4, 0x00});
    CHECK(seg.pair_swap_flags.empty());

    DecodedSequences dec = decode_sequence_segment(seg, fseq, opt);
    REQUIRE(dec.seqs == want_seqs);
    CHECK(dec.pair_swap.size() == 0);
}

TEST_CASE("delta coding switches to absolute at the documented limit") {
    testkit::Rng rng(52);
    ForwardSequence fseq;
    fseq.bases = testkit::random_dna(rng, 200000);
    SegmentOptions opt;

    {
        std::vector<MapResult> results;
        results.push_back(matched_at(fseq, 1000, 10, false));
        results.push_back(matched_at(fseq, 1000 + 65535, 10, false));
        SequenceSegment seg = build_sequence_segment(results, opt);
        CHECK(seg.pos_mode_flags == Bytes{0x02});
        CHECK(seg.pos_absolutes.size() == 8);
        CHECK(seg.pos_deltas == Bytes{0xFF, 0xFF, 0x03}); // varint 65535
        check_roundtrip(results, fseq, opt);
    }
    {
        std::vector<MapResult> results;
        results.push_back(matched_at(fseq, 1000, 10, false));
        results.push_back(matched_at(fseq, 1000 + 65536, 10, false));
        SequenceSegment seg = build_sequence_segment(results, opt);
        CHECK(seg.pos_mode_flags == Bytes{0x00});
        CHECK(seg.pos_absolutes.size() == 16);
        CHECK(seg.pos_deltas.empty());
        check_roundtrip(results, fseq, opt);
    }
    {
        // Equal positions delta-code as zero.
        std::vector<MapResult> results;
        results.push_back(matched_at(fseq, 500, 10, false));
        results.push_back(matched_at(fseq, 500, 10, true));
        SequenceSegment seg = build_sequence_segment(results, opt);
        CHECK(seg.pos_mode_flags == Bytes{0x02});
        CHECK(seg.pos_deltas == Bytes{0x00});
        check_roundtrip(results, fseq, opt);
    }
}

TEST_CASE("matched reads may carry N through the exception bytes") {
    testkit::Rng rng(53);
    ForwardSequence fseq;
    fseq.bases = testkit::random_dna(rng, 100);

    MapResult r = matched_at(fseq, 10, 8, false);
    r.bitmap.set(3, false);
    r.non_ref.push_back('N');
    r.qual[3] = 'N';

    std::vector<MapResult> results{r};
    SegmentOptions opt;
    SequenceSegment seg = build_sequence_segment(results, opt);
    CHECK(seg.non_ref == Bytes{'N'});
    CHECK(seg.non_ref_lengths == Bytes{1});
    check_roundtrip(results, fseq, opt);
}

TEST_CASE("pair swaps are recorded and ride the stored order") {
    testkit::Rng rng(54);
    ForwardSequence fseq;
    fseq.bases = testkit::random_dna(rng, 10000);
    SegmentOptions opt;
    opt.paired = true;

    std::vector<MapResult> results;
    // Pair 0 arrives reverse-first and gets swapped.
    results.push_back(matched_at(fseq, 2000, 12, true));
    results.push_back(matched_at(fseq, 1800, 12, false));
    // Pair 1 is already forward-first.
    results.push_back(matched_at(fseq, 300, 12, false));
    results.push_back(matched_at(fseq, 450, 12, true));
    // Pair 2 has an unmatched mate and is never swapped.
    results.push_back(matched_at(fseq, 900, 12, true));
    results.push_back(unmatched_read("TTTTGGGGCCCC"));

    SequenceSegment seg = build_sequence_segment(results, opt);
    // After the swap, pair 0 is stored forward-first.
    CHECK_FALSE(results[0].reverse);
    CHECK(results[0].ref_start == 1800);
    CHECK(results[1].reverse);
    CHECK(seg.pair_swap_flags == Bytes{0x01});

    DecodedSequences dec = decode_sequence_segment(seg, fseq, opt);
    REQUIRE(dec.pair_swap.size() == 3);
    CHECK(dec.pair_swap[0]);
    CHECK_FALSE(dec.pair_swap[1]);
    CHECK_FALSE(dec.pair_swap[2]);
    for (size_t i = 0; i < results.size(); ++i) CHECK(dec.seqs[i] == results[i].qual);
}

TEST_CASE("reorder stores units by mapped position with unmatched last") {
    testkit::Rng rng(55);
    ForwardSequence fseq;
    fseq.bases = testkit::random_dna(rng, 50000);
    SegmentOptions opt;
    opt.reorder = true;

    std::vector<MapResult> results;
    results.push_back(matched_at(fseq, 30000, 15, false));
    results.push_back(unmatched_read("GGGGGGGGGGGGGGG"));
    results.push_back(matched_at(fseq, 100, 15, true));
    results.push_back(matched_at(fseq, 7000, 15, false));
    std::vector<std::string> originals;
    for (const auto& r : results) originals.push_back(r.qual);

    SequenceSegment seg = build_sequence_segment(results, opt);
    // Stored order: 100, 7000, 30000, then the unmatched read.
    CHECK(results[0].ref_start == 100);
    CHECK(results[1].ref_start == 7000);
    CHECK(results[2].ref_start == 30000);
    CHECK_FALSE(results[3].matched);

    // The permutation rides behind the matched bits: stored slot -> original.
    ByteReader perm(seg.matched_flags.data() + 1, seg.matched_flags.size() - 1);
    CHECK(perm.varint() == 2);
    CHECK(perm.varint() == 3);
    CHECK(perm.varint() == 0);
    CHECK(perm.varint() == 1);
    CHECK(perm.at_end());

    DecodedSequences dec = decode_sequence_segment(seg, fseq, opt);
    CHECK(dec.seqs[0] == originals[2]);
    CHECK(dec.seqs[1] == originals[3]);
    CHECK(dec.seqs[2] == originals[0]);
    CHECK(dec.seqs[3] == originals[1]);
}

TEST_CASE("paired reorder moves mates together and keeps swap bits aligned") {
    testkit::Rng rng(56);
    ForwardSequence fseq;
    fseq.bases = testkit::random_dna(rng, 50000);
    SegmentOptions opt;
    opt.paired = true;
    opt.reorder = true;

    std::vector<MapResult> results;
    // Pair 0 keys on 9000 and needs a swap.
    results.push_back(matched_at(fseq, 9000, 10, true));
    results.push_back(matched_at(fseq, 9150, 10, false));
    // Pair 1 keys on 200.
    results.push_back(matched_at(fseq, 200, 10, false));
    results.push_back(matched_at(fseq, 350, 10, true));
    // Pair 2 is fully unmatched and sorts last.
    results.push_back(unmatched_read("AAAAACCCCC"));
    results.push_back(unmatched_read("GGGGGTTTTT"));

    SequenceSegment seg = build_sequence_segment(results, opt);
    // Stored pairs: (200, 350), then the swapped 9000 pair, then unmatched.
    CHECK(results[0].ref_start == 200);
    CHECK(results[2].ref_start == 9150);
    CHECK(results[3].ref_start == 9000);
    CHECK_FALSE(results[4].matched);
    CHECK(seg.pair_swap_flags == Bytes{0x02});

    DecodedSequences dec = decode_sequence_segment(seg, fseq, opt);
    REQUIRE(dec.pair_swap.size() == 3);
    CHECK_FALSE(dec.pair_swap[0]);
    CHECK(dec.pair_swap[1]);
    CHECK_FALSE(dec.pair_swap[2]);
    for (size_t i = 0; i < results.size(); ++i) CHECK(dec.seqs[i] == results[i].qual);
}

TEST_CASE("empty chunks roundtrip under every option combination") {
    ForwardSequence fseq;
    fseq.bases = "ACGT";
    for (bool paired : {false, true}) {
        for (bool reorder : {false, true}) {
            SegmentOptions opt{paired, reorder};
            std::vector<MapResult> results;
            SequenceSegment seg = build_sequence_segment(results, opt);
            DecodedSequences dec = decode_sequence_segment(seg, fseq, opt);
            CHECK(dec.read_count == 0);
            CHECK(dec.seqs.empty());
        }
    }
}

TEST_CASE("roundtrip over aligner output, all option combinations") {
    testkit::Rng rng(57);
    ForwardSequence fseq;
    fseq.bases = testkit::random_dna(rng, 100000);
    fseq.source_boundaries.emplace_back("c", 0);
    SeedIndex index = build_index(fseq, 12);
    AlignParams params;

    std::vector<MapResult> base;
    testkit::ReadSimParams sim;
    for (int i = 0; i < 600; ++i) {
        std::string read = i % 11 == 0 ? testkit::random_dna(rng, 100 + rng.below(40))
                                       : testkit::sample_read(rng, fseq.bases, sim);
        MapResult mr = align_read(read, index, fseq, params);
        mr.qual = read;
        base.push_back(std::move(mr));
    }
    size_t matched = 0;
    for (const auto& r : base) matched += r.matched;
    REQUIRE(matched > 400);
    REQUIRE(matched < base.size());

    for (bool paired : {false, true}) {
        for (bool reorder : {false, true}) {
            SegmentOptions opt{paired, reorder};
            std::vector<MapResult> results = base;
            SequenceSegment seg = build_sequence_segment(results, opt);
            CHECK(seg.read_count == 600);
            if (reorder) {
                // Stored matched positions are nondecreasing per unit.
                uint64_t prev = 0;
                const uint32_t unit = paired ? 2 : 1;
                for (size_t u = 0; u * unit < results.size(); ++u) {
                    uint64_t key = UINT64_MAX;
                    for (uint32_t k = 0; k < unit; ++k) {
                        const MapResult& r = results[u * unit + k];
                        if (r.matched) {
                            key = r.ref_start;
                            break;
                        }
                    }
                    if (key != UINT64_MAX) {
                        CHECK(key >= prev);
                        prev = key;
                    }
                }
            }
            DecodedSequences dec = decode_sequence_segment(seg, fseq, opt);
            REQUIRE(dec.read_count == results.size());
            for (size_t i = 0; i < results.size(); ++i)
                REQUIRE(dec.seqs[i] == results[i].qual);
        }
    }
}

TEST_CASE("decoder rejects structurally broken segments") {
    testkit::Rng rng(58);
    ForwardSequence fseq;
    fseq.bases = testkit::random_dna(rng, 5000);
    SegmentOptions opt;

    auto fresh = [&] {
        std::vector<MapResult> results;
        results.push_back(matched_at(fseq, 100, 10, false));
        results.push_back(matched_at(fseq, 220, 10, true));
        results.push_back(unmatched_read("ACGTACGTAC"));
        return build_sequence_segment(results, opt);
    };

    {
        SequenceSegment seg = fresh();
        seg.matched_count = 1;
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        SequenceSegment seg = fresh();
        seg.matched_count = seg.read_count + 1;
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        SequenceSegment seg = fresh();
        seg.matched_flags.push_back(0x00);
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        SequenceSegment seg = fresh();
        seg.bitmap.pop_back();
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        // First matched read flagged delta without a predecessor.
        SequenceSegment seg = fresh();
        seg.pos_mode_flags[0] |= 0x01;
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        SequenceSegment seg = fresh();
        seg.read_lengths.clear();
        put_varint(seg.read_lengths, (1u << 28) + 1);
        put_varint(seg.read_lengths, 10);
        put_varint(seg.read_lengths, 10);
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        SequenceSegment seg = fresh();
        seg.non_ref.push_back('C');
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        SequenceSegment seg = fresh();
        seg.non_ref_lengths[0] = 1;
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        // Escape pointing past the only unmatched read.
        SequenceSegment seg = fresh();
        Bytes bogus;
        put_varint(bogus, 1);
        put_varint(bogus, 5);
        put_varint(bogus, 0);
        bogus.insert(bogus.end(), seg.unmatched.begin() + 1, seg.unmatched.end());
        seg.unmatched = std::move(bogus);
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        SequenceSegment seg = fresh();
        seg.pair_swap_flags.push_back(0x00);
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        // Mapped position beyond the reference. Only the first matched read
        // is coded absolutely, the second rides a delta.
        SequenceSegment seg = fresh();
        REQUIRE(seg.pos_absolutes.size() == 8);
        seg.pos_absolutes.clear();
        put_u64(seg.pos_absolutes, fseq.bases.size() + 1);
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, opt), corruption_error);
    }
    {
        // Odd read count never decodes as paired.
        SequenceSegment seg = fresh();
        SegmentOptions paired_opt;
        paired_opt.paired = true;
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, paired_opt), corruption_error);
    }
    {
        // Permutation with a duplicate entry.
        SegmentOptions ropt;
        ropt.reorder = true;
        std::vector<MapResult> results;
        results.push_back(matched_at(fseq, 100, 10, false));
        results.push_back(matched_at(fseq, 220, 10, true));
        results.push_back(unmatched_read("ACGTACGTAC"));
        SequenceSegment seg = build_sequence_segment(results, ropt);
        Bytes flags(seg.matched_flags.begin(), seg.matched_flags.begin() + 1);
        put_varint(flags, 0);
        put_varint(flags, 0);
        put_varint(flags, 1);
        seg.matched_flags = std::move(flags);
        CHECK_THROWS_AS(decode_sequence_segment(seg, fseq, ropt), corruption_error);
    }
}
