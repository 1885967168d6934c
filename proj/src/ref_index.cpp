#include "fqzkit/ref_index.hpp"

#include <cstdio>
#include <fstream>
#include <memory>

#include "fqzkit/bytes.hpp"
#include "fqzkit/fastq.hpp"

namespace fqzkit {

namespace {

constexpr char kIndexMagic[8] = {'F', 'Q', 'Z', 'I', 'D', 'X', '\0', '\1'};
constexpr uint32_t kIndexVersion = 1;

// code4: A->0 C->1 G->2 T->3, 0xFF otherwise.
constexpr std::array<uint8_t, 256> make_code4() {
    std::array<uint8_t, 256> t{};
    for (auto& v : t) v = 0xFF;
    t['A'] = 0;
    t['C'] = 1;
    t['G'] = 2;
    t['T'] = 3;
    return t;
}
constexpr auto kCode4 = make_code4();

// code2 for the second seed base: A->0 C->1 T->2 ('G' is never valid there).
constexpr std::array<uint8_t, 256> make_code2() {
    std::array<uint8_t, 256> t{};
    for (auto& v : t) v = 0xFF;
    t['A'] = 0;
    t['C'] = 1;
    t['T'] = 2;
    return t;
}
constexpr auto kCode2 = make_code2();

} // namespace

uint64_t ForwardSequence::checksum() const {
    return fnv1a64(bases);
}

ForwardSequence build_forward_sequence(const std::string& fasta_path) {
    std::unique_ptr<LineSource> in = open_line_source(fasta_path, gz_suffix(fasta_path));

    ForwardSequence fseq;
    std::string line;
    bool seen_contig = false;
    while (in->next_line(line)) {
        if (line.empty()) continue;
        if (line[0] == '>') {
            size_t sp = line.find_first_of(" \t");
            std::string name = line.substr(1, sp == std::string::npos ? sp : sp - 1);
            fseq.source_boundaries.emplace_back(std::move(name), fseq.bases.size());
            seen_contig = true;
            continue;
        }
        if (!seen_contig) throw parse_error(fasta_path + ": sequence data before first '>' header");
        for (char c : line) {
            if (c >= 'a' && c <= 'z') c = char(c - 'a' + 'A');
            fseq.bases.push_back(kCode4[uint8_t(c)] == 0xFF ? 'A' : c);
        }
    }
    if (fseq.bases.empty()) throw parse_error(fasta_path + ": no sequence data");
    return fseq;
}

uint64_t seed_ordinal(const char* seed, uint32_t k) {
    if (seed[0] != 'G') return kInvalidSeed;
    uint8_t second = kCode2[uint8_t(seed[1])];
    if (second == 0xFF) return kInvalidSeed;
    uint64_t ordinal = uint64_t(second) << (2 * (k - 2));
    uint64_t tail = 0;
    for (uint32_t j = 2; j < k; ++j) {
        uint8_t code = kCode4[uint8_t(seed[j])];
        if (code == 0xFF) return kInvalidSeed;
        tail = (tail << 2) | code;
    }
    return ordinal + tail;
}

SeedIndex build_index(const ForwardSequence& fseq, uint32_t k) {
    if (k < kMinSeedLen || k > kMaxSeedLen)
        throw io_error("seed length must be in [" + std::to_string(kMinSeedLen) + "," +
                       std::to_string(kMaxSeedLen) + "]");
    if (fseq.bases.size() < k) throw io_error("reference shorter than seed length");

    SeedIndex index;
    index.k = k;
    index.ref_checksum = fseq.checksum();
    index.source_boundaries = fseq.source_boundaries;
    index.range_index.assign(seed_space(k) + 1, 0);

    const char* bases = fseq.bases.data();
    const uint64_t last = fseq.bases.size() - k;

    // Counting pass, then prefix sums, then a second pass fills positions in
    // ascending order per ordinal.
    for (uint64_t p = 0; p <= last; ++p) {
        uint64_t ordinal = seed_ordinal(bases + p, k);
        if (ordinal != kInvalidSeed) ++index.range_index[ordinal + 1];
    }
    for (size_t i = 1; i < index.range_index.size(); ++i)
        index.range_index[i] += index.range_index[i - 1];

    index.forward_index.resize(index.range_index.back());
    std::vector<uint64_t> cursor(index.range_index.begin(), index.range_index.end() - 1);
    for (uint64_t p = 0; p <= last; ++p) {
        uint64_t ordinal = seed_ordinal(bases + p, k);
        if (ordinal != kInvalidSeed) index.forward_index[cursor[ordinal]++] = p;
    }
    return index;
}

namespace {

void write_all(std::ofstream& out, const void* data, size_t size, const std::string& path) {
    out.write(static_cast<const char*>(data), std::streamsize(size));
    if (!out) throw io_error("write failure on " + path);
}

void read_all(std::ifstream& in, void* data, size_t size, const std::string& path) {
    in.read(static_cast<char*>(data), std::streamsize(size));
    if (in.gcount() != std::streamsize(size))
        throw corruption_error(path + ": index file truncated");
}

} // namespace

void save_index(const SeedIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");

    Bytes head;
    head.insert(head.end(), kIndexMagic, kIndexMagic + 8);
    put_u32(head, kIndexVersion);
    put_u32(head, index.k);
    put_u64(head, index.ref_checksum);
    put_u64(head, index.source_boundaries.size());
    for (const auto& [name, start] : index.source_boundaries) {
        put_u32(head, uint32_t(name.size()));
        head.insert(head.end(), name.begin(), name.end());
        put_u64(head, start);
    }
    put_u64(head, index.range_index.size());
    put_u64(head, index.forward_index.size());
    write_all(out, head.data(), head.size(), path);
    write_all(out, index.range_index.data(), index.range_index.size() * 8, path);
    write_all(out, index.forward_index.data(), index.forward_index.size() * 8, path);
    out.close();
    if (!out) throw io_error("close failure on " + path);
}

SeedIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);

    char magic[8];
    read_all(in, magic, 8, path);
    if (std::memcmp(magic, kIndexMagic, 8) != 0)
        throw corruption_error(path + ": not a seed index file");

    uint8_t scalar[8];
    auto get32 = [&] {
        read_all(in, scalar, 4, path);
        return get_u32(scalar);
    };
    auto get64 = [&] {
        read_all(in, scalar, 8, path);
        return get_u64(scalar);
    };

    uint32_t version = get32();
    if (version != kIndexVersion)
        throw corruption_error(path + ": unsupported index version " + std::to_string(version));

    SeedIndex index;
    index.k = get32();
    if (index.k < kMinSeedLen || index.k > kMaxSeedLen)
        throw corruption_error(path + ": seed length out of range");
    index.ref_checksum = get64();

    uint64_t n_contigs = get64();
    index.source_boundaries.reserve(n_contigs);
    for (uint64_t i = 0; i < n_contigs; ++i) {
        uint32_t len = get32();
        if (len > (1u << 20)) throw corruption_error(path + ": contig name too long");
        std::string name(len, '\0');
        read_all(in, name.data(), len, path);
        uint64_t start = get64();
        index.source_boundaries.emplace_back(std::move(name), start);
    }

    uint64_t range_len = get64();
    uint64_t fwd_len = get64();
    if (range_len != seed_space(index.k) + 1)
        throw corruption_error(path + ": range index length mismatch");
    index.range_index.resize(range_len);
    index.forward_index.resize(fwd_len);
    read_all(in, index.range_index.data(), range_len * 8, path);
    read_all(in, index.forward_index.data(), fwd_len * 8, path);

    if (index.range_index.front() != 0 || index.range_index.back() != fwd_len)
        throw corruption_error(path + ": inconsistent range index");
    return index;
}

void verify_index(const SeedIndex& index, const ForwardSequence& fseq) {
    if (index.ref_checksum != fseq.checksum())
        throw ref_mismatch_error("seed index was built over a different reference sequence");
}

} // namespace fqzkit
