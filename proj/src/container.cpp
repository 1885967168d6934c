#include "fqzkit/container.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "fqzkit/errors.hpp"

namespace fqzkit {

namespace {

const uint8_t kMagic[8] = {'F', 'Q', 'Z', 'K', 'I', 'T', 0, 1};

uint32_t float_bits(float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    return v;
}

float bits_float(uint32_t v) {
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

void pread_all(int fd, void* p, size_t n, uint64_t off, const std::string& path) {
    uint8_t* dst = static_cast<uint8_t*>(p);
    while (n > 0) {
        ssize_t got = ::pread(fd, dst, n, off_t(off));
        if (got < 0) {
            if (errno == EINTR) continue;
            throw io_error("read from '" + path + "' failed: " + std::strerror(errno));
        }
        if (got == 0) throw corruption_error("archive truncated");
        dst += got;
        n -= size_t(got);
        off += uint64_t(got);
    }
}

} // namespace

const char* field_name(unsigned field) {
    static const char* const names[kFieldCount] = {
        "matched_flags", "pos_mode",       "pos_deltas",   "pos_absolutes",
        "strand_bits",   "read_lengths",   "bitmap",       "non_ref",
        "non_ref_lens",  "unmatched",      "pair_swaps",   "qual_main",
        "qual_rounds",   "qual_scores",    "qual_remainder", "names",
    };
    return field < kFieldCount ? names[field] : "unknown";
}

Bytes encode_file_header(const FileHeader& h) {
    Bytes out;
    out.reserve(kFileHeaderSize);
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32(out, h.version);
    put_u32(out, h.flags);
    out.push_back(h.seed_k);
    out.push_back(h.quality_mode);
    out.push_back(h.lossy_bins);
    out.push_back(h.max_candidates);
    put_u32(out, float_bits(h.max_hamming_frac));
    put_u32(out, float_bits(h.max_edit_frac));
    put_u32(out, float_bits(h.window_slack_frac));
    put_u64(out, h.ref_checksum);
    put_u32(out, h.codec_registry_version);
    put_u32(out, h.reads_per_chunk);
    put_u64(out, h.chunk_table_address);
    put_u64(out, 0); // reserved
    return out;
}

FileHeader decode_file_header(const uint8_t* p, size_t n) {
    if (n < kFileHeaderSize)
        throw corruption_error("file too small to be an archive");
    if (std::memcmp(p, kMagic, 8) != 0)
        throw corruption_error("not an archive (bad magic)");
    FileHeader h;
    h.version = get_u32(p + 8);
    if (h.version != 1)
        throw corruption_error("unsupported archive version");
    h.flags = get_u32(p + 12);
    h.seed_k = p[16];
    h.quality_mode = p[17];
    h.lossy_bins = p[18];
    h.max_candidates = p[19];
    h.max_hamming_frac = bits_float(get_u32(p + 20));
    h.max_edit_frac = bits_float(get_u32(p + 24));
    h.window_slack_frac = bits_float(get_u32(p + 28));
    h.ref_checksum = get_u64(p + 32);
    h.codec_registry_version = get_u32(p + 40);
    h.reads_per_chunk = get_u32(p + 44);
    h.chunk_table_address = get_u64(p + 48);
    if (h.quality_mode > 1)
        throw corruption_error("unknown quality mode");
    if (h.codec_registry_version != kCodecRegistryVersion)
        throw corruption_error("archive uses an unknown codec registry version");
    if (h.reads_per_chunk == 0)
        throw corruption_error("chunk size of zero");
    return h;
}

Bytes encode_chunk_header(const ChunkHeader& h) {
    Bytes out;
    out.reserve(kChunkHeaderSize);
    put_u32(out, h.ordinal);
    put_u32(out, h.read_count);
    put_u32(out, h.matched_count);
    out.push_back(h.dominant_rounds);
    out.push_back(0); // reserved
    put_u16(out, h.field_presence);
    for (unsigned i = 0; i < kFieldCount; ++i) {
        put_u32(out, h.field_size[i]);
        out.push_back(h.field_codec[i]);
    }
    put_u32(out, 0); // reserved
    return out;
}

ChunkHeader decode_chunk_header(const uint8_t* p, size_t n) {
    if (n < kChunkHeaderSize)
        throw corruption_error("chunk header truncated");
    ChunkHeader h;
    h.ordinal = get_u32(p);
    h.read_count = get_u32(p + 4);
    h.matched_count = get_u32(p + 8);
    h.dominant_rounds = p[12];
    h.field_presence = get_u16(p + 14);
    for (unsigned i = 0; i < kFieldCount; ++i) {
        h.field_size[i] = get_u32(p + 16 + i * 5);
        h.field_codec[i] = p[16 + i * 5 + 4];
    }
    for (unsigned i = 0; i < kFieldCount; ++i) {
        bool present = (h.field_presence >> i) & 1u;
        if (present != (h.field_size[i] > 0))
            throw corruption_error("field presence mask disagrees with field sizes");
        if (present) unpack_codec(h.field_codec[i]); // id validation only
    }
    return h;
}

// ---- writer ---------------------------------------------------------------

ArchiveWriter::ArchiveWriter(const std::string& path, const FileHeader& header)
    : path_(path) {
    file_ = std::fopen(path.c_str(), "wb");
    if (!file_)
        throw io_error("cannot create '" + path + "': " + std::strerror(errno));
    FileHeader h = header;
    h.chunk_table_address = 0;
    Bytes hb = encode_file_header(h);
    write_all(hb.data(), hb.size());
    offset_ = hb.size();
}

ArchiveWriter::~ArchiveWriter() {
    // Closing without finalize() is deliberate on error paths; the file is
    // left with a zero table address, which readers reject as incomplete.
    if (file_) std::fclose(file_);
}

void ArchiveWriter::write_all(const void* p, size_t n) {
    if (n == 0) return;
    if (std::fwrite(p, 1, n, file_) != n)
        throw io_error("write to '" + path_ + "' failed: " + std::strerror(errno));
}

void ArchiveWriter::append_chunk(const ChunkHeader& header,
                                 const std::array<Bytes, kFieldCount>& fields) {
    if (finalized_) throw std::logic_error("append after finalize");
    uint64_t size = kChunkHeaderSize;
    for (unsigned i = 0; i < kFieldCount; ++i) {
        if (header.field_size[i] != fields[i].size())
            throw std::logic_error("chunk header sizes disagree with field payloads");
        bool present = (header.field_presence >> i) & 1u;
        if (present != !fields[i].empty())
            throw std::logic_error("presence mask disagrees with field payloads");
        size += fields[i].size();
    }
    Bytes hb = encode_chunk_header(header);
    write_all(hb.data(), hb.size());
    for (const Bytes& f : fields) write_all(f.data(), f.size());
    entries_.push_back({header.ordinal, offset_, size});
    offset_ += size;
}

void ArchiveWriter::finalize() {
    if (finalized_) throw std::logic_error("finalize called twice");
    std::sort(entries_.begin(), entries_.end(),
              [](const ChunkEntry& a, const ChunkEntry& b) { return a.ordinal < b.ordinal; });
    for (size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].ordinal != i)
            throw std::logic_error("chunk ordinals are not contiguous");

    Bytes table;
    put_u64(table, entries_.size());
    for (const ChunkEntry& e : entries_) {
        put_u32(table, e.ordinal);
        put_u64(table, e.offset);
        put_u64(table, e.size);
    }
    uint64_t addr = offset_;
    write_all(table.data(), table.size());

    if (std::fseek(file_, 48, SEEK_SET) != 0)
        throw io_error("seek in '" + path_ + "' failed: " + std::strerror(errno));
    Bytes patch;
    put_u64(patch, addr);
    write_all(patch.data(), patch.size());

    if (std::fflush(file_) != 0)
        throw io_error("flush of '" + path_ + "' failed: " + std::strerror(errno));
    std::FILE* f = file_;
    file_ = nullptr;
    if (std::fclose(f) != 0)
        throw io_error("close of '" + path_ + "' failed: " + std::strerror(errno));
    finalized_ = true;
    offset_ = addr + table.size();
}

// ---- reader ---------------------------------------------------------------

ArchiveReader::ArchiveReader(const std::string& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0)
        throw io_error("cannot open '" + path + "': " + std::strerror(errno));
    try {
        struct stat st;
        if (::fstat(fd_, &st) != 0)
            throw io_error("stat of '" + path + "' failed: " + std::strerror(errno));
        file_size_ = uint64_t(st.st_size);
        if (file_size_ < kFileHeaderSize)
            throw corruption_error("file too small to be an archive");

        uint8_t hb[kFileHeaderSize];
        pread_all(fd_, hb, sizeof hb, 0, path_);
        header_ = decode_file_header(hb, sizeof hb);
        if (header_.chunk_table_address == 0)
            throw corruption_error("archive is incomplete (missing chunk table)");

        uint64_t addr = header_.chunk_table_address;
        if (addr < kFileHeaderSize || addr + 8 > file_size_)
            throw corruption_error("chunk table address out of range");
        uint8_t cb[8];
        pread_all(fd_, cb, 8, addr, path_);
        uint64_t count = get_u64(cb);
        if (count > (file_size_ - addr - 8) / 20)
            throw corruption_error("chunk table overruns the file");
        if (addr + 8 + count * 20 != file_size_)
            throw corruption_error("chunk table does not reach the end of the file");

        Bytes tb(size_t(count) * 20);
        pread_all(fd_, tb.data(), tb.size(), addr + 8, path_);
        ByteReader in(tb);
        entries_.reserve(size_t(count));
        for (uint64_t i = 0; i < count; ++i) {
            ChunkEntry e;
            e.ordinal = in.u32();
            e.offset = in.u64();
            e.size = in.u64();
            if (e.ordinal != i)
                throw corruption_error("chunk ordinals are not contiguous");
            if (e.size < kChunkHeaderSize)
                throw corruption_error("chunk smaller than its header");
            if (e.offset < kFileHeaderSize || e.offset > addr || e.size > addr - e.offset)
                throw corruption_error("chunk bounds out of range");
            entries_.push_back(e);
        }

        // Chunks are appended in arrival order, which need not match ordinal
        // order, but together they must tile [header, table) exactly.
        std::vector<std::pair<uint64_t, uint64_t>> spans;
        spans.reserve(entries_.size());
        for (const ChunkEntry& e : entries_) spans.emplace_back(e.offset, e.size);
        std::sort(spans.begin(), spans.end());
        uint64_t expected = kFileHeaderSize;
        for (const auto& [off, size] : spans) {
            if (off != expected)
                throw corruption_error("chunks overlap or leave a gap");
            expected = off + size;
        }
        if (expected != addr)
            throw corruption_error("chunks do not reach the chunk table");
    } catch (...) {
        ::close(fd_);
        fd_ = -1;
        throw;
    }
}

ArchiveReader::~ArchiveReader() {
    if (fd_ >= 0) ::close(fd_);
}

ChunkHeader ArchiveReader::read_chunk_header(size_t index) const {
    if (index >= entries_.size())
        throw std::logic_error("chunk index out of range");
    uint8_t hb[kChunkHeaderSize];
    pread_all(fd_, hb, sizeof hb, entries_[index].offset, path_);
    ChunkHeader h = decode_chunk_header(hb, sizeof hb);
    if (h.ordinal != entries_[index].ordinal)
        throw corruption_error("chunk header ordinal disagrees with the table");
    return h;
}

EncodedChunk ArchiveReader::read_chunk(size_t index) const {
    if (index >= entries_.size())
        throw std::logic_error("chunk index out of range");
    const ChunkEntry& e = entries_[index];
    Bytes buf(size_t(e.size));
    pread_all(fd_, buf.data(), buf.size(), e.offset, path_);

    EncodedChunk out;
    out.header = decode_chunk_header(buf.data(), buf.size());
    if (out.header.ordinal != e.ordinal)
        throw corruption_error("chunk header ordinal disagrees with the table");
    uint64_t total = kChunkHeaderSize;
    for (unsigned i = 0; i < kFieldCount; ++i) total += out.header.field_size[i];
    if (total != e.size)
        throw corruption_error("field sizes do not fill the chunk");
    size_t off = kChunkHeaderSize;
    for (unsigned i = 0; i < kFieldCount; ++i) {
        size_t n = out.header.field_size[i];
        out.fields[i] = Bytes(buf.begin() + off, buf.begin() + off + n);
        off += n;
    }
    return out;
}

} // namespace fqzkit
