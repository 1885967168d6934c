#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fqzkit/ref_index.hpp"

#include <zlib.h>

#include <map>

#include "support/corpus.hpp"

using namespace fqzkit;
using testkit::TempDir;

TEST_CASE("forward sequence concatenates contigs and rewrites non-ACGT to A") {
    TempDir td("fqz_ref");
    testkit::write_file(td.file("a.fa"), ">c1 descr\nACGT\n>c2\nNNAC\n");
    ForwardSequence fseq = build_forward_sequence(td.file("a.fa"));
    CHECK(fseq.bases == "ACGTAAAC");
    REQUIRE(fseq.source_boundaries.size() == 2);
    CHECK(fseq.source_boundaries[0] == std::pair<std::string, uint64_t>{"c1", 0});
    CHECK(fseq.source_boundaries[1] == std::pair<std::string, uint64_t>{"c2", 4});

    testkit::write_file(td.file("b.fa"), ">c\nacgn\n");
    CHECK(build_forward_sequence(td.file("b.fa")).bases == "ACGA");

    testkit::write_file(td.file("c.fa"), ">c\n\n");
    CHECK_THROWS_AS(build_forward_sequence(td.file("c.fa")), parse_error);
    testkit::write_file(td.file("d.fa"), "ACGT\n");
    CHECK_THROWS_AS(build_forward_sequence(td.file("d.fa")), parse_error);
    CHECK_THROWS_AS(build_forward_sequence(td.file("missing.fa")), io_error);
}

TEST_CASE("forward sequence reads gzipped FASTA by suffix") {
    TempDir td("fqz_ref_gz");
    std::string gz_path = td.file("r.fa.gz");
    gzFile gz = gzopen(gz_path.c_str(), "wb");
    REQUIRE(gz != nullptr);
    const char text[] = ">c1\nACGTACGT\n>c2\nTTGG\n";
    REQUIRE(gzwrite(gz, text, unsigned(sizeof text - 1)) > 0);
    REQUIRE(gzclose(gz) == Z_OK);

    ForwardSequence fseq = build_forward_sequence(gz_path);
    CHECK(fseq.bases == "ACGTACGTTTGG");
    REQUIRE(fseq.source_boundaries.size() == 2);
    CHECK(fseq.source_boundaries[1] == std::pair<std::string, uint64_t>{"c2", 8});
}

TEST_CASE("seed ordinals cover exactly the G-led space") {
    std::string lo = "GA" + std::string(13, 'A');
    std::string hi = "GT" + std::string(13, 'T');
    CHECK(seed_ordinal(lo.data(), 15) == 0);
    CHECK(seed_ordinal(hi.data(), 15) == 3ull * (1ull << 26) - 1); // 3*4^13 - 1
    CHECK(seed_space(15) == 3ull * (1ull << 26));

    std::string gg = "GG" + std::string(13, 'A');
    CHECK(seed_ordinal(gg.data(), 15) == kInvalidSeed);
    std::string ag = "AG" + std::string(13, 'A');
    CHECK(seed_ordinal(ag.data(), 15) == kInvalidSeed);
    std::string gn = "GAN" + std::string(12, 'A');
    CHECK(seed_ordinal(gn.data(), 15) == kInvalidSeed);

    // Injective over a dense sample: distinct valid seeds get distinct ordinals.
    testkit::Rng rng(5);
    std::map<uint64_t, std::string> seen;
    for (int i = 0; i < 2000; ++i) {
        std::string s = "G" + std::string(1, "ACT"[rng.below(3)]) + testkit::random_dna(rng, 10);
        uint64_t ord = seed_ordinal(s.data(), 12);
        REQUIRE(ord < seed_space(12));
        auto [it, inserted] = seen.emplace(ord, s);
        if (!inserted) CHECK(it->second == s);
    }
}

TEST_CASE("index matches a naive scan oracle") {
    testkit::Rng rng(6);
    ForwardSequence fseq;
    fseq.bases = testkit::random_dna(rng, 20000);
    fseq.source_boundaries.emplace_back("c", 0);
    const uint32_t k = 12;
    SeedIndex index = build_index(fseq, k);
    CHECK(index.k == k);
    CHECK(index.ref_checksum == fseq.checksum());

    std::map<uint64_t, std::vector<uint64_t>> oracle;
    for (uint64_t p = 0; p + k <= fseq.bases.size(); ++p) {
        uint64_t ord = seed_ordinal(fseq.bases.data() + p, k);
        if (ord != kInvalidSeed) oracle[ord].push_back(p);
    }

    uint64_t total = 0;
    for (const auto& [ord, positions] : oracle) {
        auto got = index.lookup(ord);
        REQUIRE(got.size() == positions.size());
        for (size_t i = 0; i < positions.size(); ++i) CHECK(got[i] == positions[i]);
        total += positions.size();
    }
    CHECK(index.forward_index.size() == total);

    // Ordinals the oracle never saw must be empty, and every indexed position
    // must re-extract to its own ordinal.
    for (int i = 0; i < 1000; ++i) {
        uint64_t ord = rng.below(seed_space(k));
        if (oracle.count(ord) == 0) CHECK(index.lookup(ord).empty());
    }
    for (int i = 0; i < 1000; ++i) {
        uint64_t p = index.forward_index[rng.below(index.forward_index.size())];
        CHECK(seed_ordinal(fseq.bases.data() + p, k) != kInvalidSeed);
    }
}

TEST_CASE("a reference without G has an empty index") {
    ForwardSequence fseq;
    fseq.bases = std::string(500, 'A') + std::string(500, 'T');
    fseq.source_boundaries.emplace_back("c", 0);
    SeedIndex index = build_index(fseq, 12);
    CHECK(index.forward_index.empty());
    CHECK(index.range_index.front() == 0);
    CHECK(index.range_index.back() == 0);
}

TEST_CASE("seed length bounds are enforced") {
    ForwardSequence fseq;
    fseq.bases = std::string(100, 'G');
    CHECK_THROWS_AS(build_index(fseq, 10), io_error);
    CHECK_THROWS_AS(build_index(fseq, 21), io_error);
    ForwardSequence tiny;
    tiny.bases = "ACGT";
    CHECK_THROWS_AS(build_index(tiny, 12), io_error);
}

TEST_CASE("save/load roundtrips bit-for-bit and guards corruption") {
    TempDir td("fqz_ref");
    testkit::Rng rng(7);
    ForwardSequence fseq;
    fseq.bases = testkit::random_dna(rng, 30000);
    fseq.source_boundaries.emplace_back("chrA", 0);
    fseq.source_boundaries.emplace_back("chrB", 15000);
    SeedIndex index = build_index(fseq, 12);

    save_index(index, td.file("a.idx"));
    SeedIndex back = load_index(td.file("a.idx"));
    CHECK(back.k == index.k);
    CHECK(back.ref_checksum == index.ref_checksum);
    CHECK(back.source_boundaries == index.source_boundaries);
    CHECK(back.range_index == index.range_index);
    CHECK(back.forward_index == index.forward_index);

    CHECK_NOTHROW(verify_index(back, fseq));
    ForwardSequence other;
    other.bases = testkit::random_dna(rng, 30000);
    CHECK_THROWS_AS(verify_index(back, other), ref_mismatch_error);

    // Truncation and magic damage are both structural corruption.
    std::string raw = testkit::read_file(td.file("a.idx"));
    testkit::write_file(td.file("trunc.idx"), raw.substr(0, raw.size() / 2));
    CHECK_THROWS_AS(load_index(td.file("trunc.idx")), corruption_error);
    std::string bad = raw;
    bad[0] = 'X';
    testkit::write_file(td.file("magic.idx"), bad);
    CHECK_THROWS_AS(load_index(td.file("magic.idx")), corruption_error);
    CHECK_THROWS_AS(load_index(td.file("missing.idx")), io_error);
}
