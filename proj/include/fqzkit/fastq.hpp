#ifndef FQZKIT_FASTQ_HPP
#define FQZKIT_FASTQ_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fqzkit/errors.hpp"

namespace fqzkit {

// One FASTQ read. `name` is the identifier line up to the first space and
// without the leading '@'; `comment` is everything after that space (empty if
// none). seq is uppercase over {A,C,G,T,N}; qual bytes are in [0x21, 0x7E] and
// match seq in length. The '+' separator line content is never kept.
struct FastqRecord {
    std::string name;
    std::string comment;
    std::string seq;
    std::string qual;

    bool operator==(const FastqRecord&) const = default;
};

// A batch of records handed from the read thread to workers. Immutable after
// construction. In paired mode, records of a pair are adjacent (r1 then r2)
// and the batch holds up to reads_per_chunk pairs.
struct ReadBatch {
    std::vector<FastqRecord> records;
    uint64_t batch_index = 0;
    bool paired = false;
};

// Sequential line source over a plain or gzip-compressed file. Single
// consumer; not shareable between threads.
class LineSource {
public:
    virtual ~LineSource() = default;
    // Returns false at end of input. Strips the trailing newline (and '\r').
    virtual bool next_line(std::string& line) = 0;
    virtual uint64_t byte_offset() const = 0;
};

std::unique_ptr<LineSource> open_line_source(const std::string& path, bool gzipped);

// Filename-based gzip detection for inputs whose compression is not declared
// anywhere else.
inline bool gz_suffix(const std::string& path) {
    return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

// Streaming FASTQ parser. Yields records in file order.
class FastqReader {
public:
    FastqReader(const std::string& path, bool gzipped);

    // Returns nullopt at clean end of input; throws parse_error on a
    // truncated or malformed record, naming the record ordinal.
    std::optional<FastqRecord> next();

    uint64_t records_read() const { return count_; }
    // Bytes the records occupy as plain FASTQ text (with a bare '+').
    uint64_t text_bytes() const { return text_bytes_; }

private:
    std::unique_ptr<LineSource> src_;
    std::string path_;
    uint64_t count_ = 0;
    uint64_t text_bytes_ = 0;
};

// Pulls batches from one stream, or from two streams in lockstep for paired
// input. Batch indices are consecutive from 0.
class BatchReader {
public:
    // Single-end.
    BatchReader(std::unique_ptr<FastqReader> r1, uint64_t reads_per_chunk);
    // Paired; streams must hold the same number of records.
    BatchReader(std::unique_ptr<FastqReader> r1, std::unique_ptr<FastqReader> r2,
                uint64_t reads_per_chunk);

    // Returns nullopt at end of input. Empty batches are never returned.
    std::optional<ReadBatch> next_batch();

    uint64_t text_bytes() const;
    uint64_t records_read() const;

private:
    std::unique_ptr<FastqReader> r1_;
    std::unique_ptr<FastqReader> r2_;
    uint64_t reads_per_chunk_;
    uint64_t next_index_ = 0;
    bool done_ = false;
};

// FASTQ emitter, plain or gzipped. Records are written as four lines with a
// bare '+' separator.
class FastqWriter {
public:
    FastqWriter(const std::string& path, bool gzipped);
    ~FastqWriter();
    FastqWriter(const FastqWriter&) = delete;
    FastqWriter& operator=(const FastqWriter&) = delete;

    void write(const FastqRecord& rec);
    // Synthetic-identifier form used when names were dropped at compression.
    void write(uint64_t ordinal, const std::string& seq, const std::string& qual);
    void close();

private:
    void put(const char* data, size_t len);
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Serialized length of a record as plain FASTQ text.
uint64_t fastq_text_size(const FastqRecord& rec);

} // namespace fqzkit

#endif
