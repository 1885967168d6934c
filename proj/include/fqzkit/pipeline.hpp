#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fqzkit/aligner.hpp"
#include "fqzkit/codec.hpp"
#include "fqzkit/qual_segment.hpp"

namespace fqzkit {

struct CompressOptions {
    std::string ref_path;
    std::string index_path;
    std::vector<std::string> inputs; // one file, or two in paired mode
    std::string output;
    bool paired = false;
    bool reorder = false;
    bool keep_names = true;
    bool gzip_output = false; // recorded so decompression re-emits gzip
    QualityMode quality_mode = QualityMode::huffman;
    unsigned lossy_bins = 0; // 0 = lossless
    uint32_t reads_per_chunk = 100000;
    unsigned threads = 1; // alignment workers; reader/writer threads are extra
    AlignParams align;
};

struct CompressionReport {
    uint64_t records = 0;
    uint64_t matched = 0;
    uint64_t chunks = 0;
    uint64_t input_bytes = 0; // plain FASTQ text size
    uint64_t output_bytes = 0;
    FieldPlan plan;
    double wall_s = 0;
    double index_s = 0; // loading and verifying reference + seed index
    double align_s = 0;
    double sequence_s = 0;
    double quality_s = 0;
    // Multi-threaded runs only: batches read but not yet written, and the
    // static bound the queues guarantee.
    uint64_t peak_in_flight = 0;
    uint64_t in_flight_bound = 0;
};

CompressionReport compress_file(const CompressOptions& opt);

struct DecompressOptions {
    std::string archive_path;
    std::string ref_path;
    std::vector<std::string> outputs; // one file, or two for a paired archive
    unsigned threads = 1;
};

struct DecompressionReport {
    uint64_t records = 0;
    uint64_t chunks = 0;
    double wall_s = 0;
};

DecompressionReport decompress_file(const DecompressOptions& opt);

} // namespace fqzkit
