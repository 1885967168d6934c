#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "fqzkit/bytes.hpp"
#include "fqzkit/codec.hpp"

namespace fqzkit {

// Field stream slots within a chunk. The slot order is wire format.
enum Field : unsigned {
    kFieldMatchedFlags = 0,
    kFieldPosModeFlags = 1,
    kFieldPosDeltas = 2,
    kFieldPosAbsolutes = 3,
    kFieldStrandBits = 4,
    kFieldReadLengths = 5,
    kFieldBitmap = 6,
    kFieldNonRef = 7,
    kFieldNonRefLengths = 8,
    kFieldUnmatched = 9,
    kFieldPairSwapFlags = 10,
    kFieldQualMain = 11,
    kFieldQualRoundLengths = 12,
    kFieldQualRoundScores = 13,
    kFieldQualRemainder = 14,
    kFieldNames = 15,
};
constexpr unsigned kFieldCount = 16;

// Short stable names for report and info output.
const char* field_name(unsigned field);

constexpr size_t kFileHeaderSize = 64;
constexpr size_t kChunkHeaderSize = 100;

constexpr uint32_t kFlagKeepNames = 1u << 0;
constexpr uint32_t kFlagGzipOutput = 1u << 1;
constexpr uint32_t kFlagPaired = 1u << 2;
constexpr uint32_t kFlagReorder = 1u << 3;

// Fixed 64-byte archive header. chunk_table_address stays 0 while the file
// is being written and is backpatched on finalize, so a crashed run leaves
// an archive that readers reject as incomplete.
struct FileHeader {
    uint32_t version = 1;
    uint32_t flags = 0;
    uint8_t seed_k = 15;
    uint8_t quality_mode = 0; // QualityMode wire value
    uint8_t lossy_bins = 0;   // 0 = lossless
    uint8_t max_candidates = 4;
    float max_hamming_frac = 0.125f;
    float max_edit_frac = 0.25f;
    float window_slack_frac = 0.25f;
    uint64_t ref_checksum = 0;
    uint32_t codec_registry_version = kCodecRegistryVersion;
    uint32_t reads_per_chunk = 100000;
    uint64_t chunk_table_address = 0;

    bool keep_names() const { return (flags & kFlagKeepNames) != 0; }
    bool gzip_output() const { return (flags & kFlagGzipOutput) != 0; }
    bool paired() const { return (flags & kFlagPaired) != 0; }
    bool reorder() const { return (flags & kFlagReorder) != 0; }
};

Bytes encode_file_header(const FileHeader& h);
FileHeader decode_file_header(const uint8_t* p, size_t n);

// Fixed 100-byte chunk header: counts, the field presence mask, and one
// (compressed size, codec byte) pair per field slot. Raw sizes are not
// recorded; every codec payload is self-describing.
struct ChunkHeader {
    uint32_t ordinal = 0;
    uint32_t read_count = 0;
    uint32_t matched_count = 0;
    uint8_t dominant_rounds = 0;
    uint16_t field_presence = 0;
    std::array<uint32_t, kFieldCount> field_size{};
    std::array<uint8_t, kFieldCount> field_codec{};
};

Bytes encode_chunk_header(const ChunkHeader& h);
ChunkHeader decode_chunk_header(const uint8_t* p, size_t n);

struct ChunkEntry {
    uint32_t ordinal = 0;
    uint64_t offset = 0;
    uint64_t size = 0; // chunk header included
};

struct EncodedChunk {
    ChunkHeader header;
    std::array<Bytes, kFieldCount> fields; // compressed payloads
};

// Sequential archive writer. Chunks may arrive in any ordinal order; the
// table is sorted before it is written. Not thread-safe; the pipeline funnels
// all appends through one writer thread.
class ArchiveWriter {
public:
    ArchiveWriter(const std::string& path, const FileHeader& header);
    ~ArchiveWriter();
    ArchiveWriter(const ArchiveWriter&) = delete;
    ArchiveWriter& operator=(const ArchiveWriter&) = delete;

    void append_chunk(const ChunkHeader& header, const std::array<Bytes, kFieldCount>& fields);
    // Writes the chunk table, backpatches its address, and closes the file.
    void finalize();

    uint64_t bytes_written() const { return offset_; }
    size_t chunks_written() const { return entries_.size(); }

private:
    void write_all(const void* p, size_t n);

    std::FILE* file_ = nullptr;
    std::string path_;
    std::vector<ChunkEntry> entries_;
    uint64_t offset_ = 0;
    bool finalized_ = false;
};

// Random-access reader. read_chunk uses positioned reads, so one reader can
// serve several decoder threads at once.
class ArchiveReader {
public:
    explicit ArchiveReader(const std::string& path);
    ~ArchiveReader();
    ArchiveReader(const ArchiveReader&) = delete;
    ArchiveReader& operator=(const ArchiveReader&) = delete;

    const FileHeader& header() const { return header_; }
    const std::vector<ChunkEntry>& chunks() const { return entries_; }
    size_t chunk_count() const { return entries_.size(); }

    EncodedChunk read_chunk(size_t index) const;
    // Header only; cheap enough for summaries over the whole archive.
    ChunkHeader read_chunk_header(size_t index) const;

private:
    int fd_ = -1;
    std::string path_;
    FileHeader header_;
    std::vector<ChunkEntry> entries_;
    uint64_t file_size_ = 0;
};

} // namespace fqzkit
