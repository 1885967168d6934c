#include "fqzkit/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "fqzkit/bounded_queue.hpp"
#include "fqzkit/container.hpp"
#include "fqzkit/errors.hpp"
#include "fqzkit/fastq.hpp"
#include "fqzkit/ref_index.hpp"
#include "fqzkit/seq_segment.hpp"

namespace fqzkit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

uint64_t nanos_since(Clock::time_point t0) {
    return uint64_t(
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
}

struct StageNanos {
    std::atomic<uint64_t> align{0};
    std::atomic<uint64_t> sequence{0};
    std::atomic<uint64_t> quality{0};
};

struct ChunkPayload {
    ChunkHeader header;
    std::array<Bytes, kFieldCount> fields;
};

// Align a batch and lay its records out as the sixteen raw field streams.
std::array<Bytes, kFieldCount> build_raw_fields(ReadBatch& batch, const SeedIndex& index,
                                                const ForwardSequence& fseq,
                                                const CompressOptions& opt, StageNanos& times,
                                                uint32_t& read_count, uint32_t& matched_count,
                                                uint8_t& dominant_rounds) {
    Clock::time_point t0 = Clock::now();
    std::vector<MapResult> results;
    results.reserve(batch.records.size());
    for (FastqRecord& rec : batch.records) {
        MapResult r = align_read(rec.seq, index, fseq, opt.align);
        r.qual = std::move(rec.qual);
        if (opt.keep_names) {
            r.name = std::move(rec.name);
            if (!rec.comment.empty()) {
                r.name += ' ';
                r.name += rec.comment;
            }
        }
        results.push_back(std::move(r));
    }
    times.align += nanos_since(t0);

    t0 = Clock::now();
    SegmentOptions sopt{opt.paired, opt.reorder};
    SequenceSegment seg = build_sequence_segment(results, sopt);
    std::array<Bytes, kFieldCount> raw;
    raw[kFieldMatchedFlags] = std::move(seg.matched_flags);
    raw[kFieldPosModeFlags] = std::move(seg.pos_mode_flags);
    raw[kFieldPosDeltas] = std::move(seg.pos_deltas);
    raw[kFieldPosAbsolutes] = std::move(seg.pos_absolutes);
    raw[kFieldStrandBits] = std::move(seg.strand_bits);
    raw[kFieldReadLengths] = std::move(seg.read_lengths);
    raw[kFieldBitmap] = std::move(seg.bitmap);
    raw[kFieldNonRef] = std::move(seg.non_ref);
    raw[kFieldNonRefLengths] = std::move(seg.non_ref_lengths);
    raw[kFieldUnmatched] = std::move(seg.unmatched);
    raw[kFieldPairSwapFlags] = std::move(seg.pair_swap_flags);
    if (opt.keep_names) {
        // One line per record in stored order, so names follow any pair swap
        // or reorder the segmenter applied.
        Bytes names;
        for (const MapResult& r : results) {
            names.insert(names.end(), r.name.begin(), r.name.end());
            names.push_back('\n');
        }
        raw[kFieldNames] = std::move(names);
    }
    times.sequence += nanos_since(t0);

    t0 = Clock::now();
    Bytes qual;
    for (const MapResult& r : results)
        qual.insert(qual.end(), r.qual.begin(), r.qual.end());
    QualitySegment qs = build_quality_segment(qual, opt.quality_mode, opt.lossy_bins);
    raw[kFieldQualMain] = std::move(qs.main);
    raw[kFieldQualRoundLengths] = std::move(qs.round_lengths);
    raw[kFieldQualRoundScores] = std::move(qs.round_scores);
    raw[kFieldQualRemainder] = std::move(qs.remainder);
    times.quality += nanos_since(t0);

    read_count = uint32_t(batch.records.size());
    matched_count = seg.matched_count;
    dominant_rounds = qs.dominant_rounds;
    return raw;
}

ChunkPayload encode_chunk_payload(uint32_t ordinal, std::array<Bytes, kFieldCount>&& raw,
                                  const FieldPlan& plan, uint32_t read_count,
                                  uint32_t matched_count, uint8_t dominant_rounds) {
    ChunkPayload out;
    out.header.ordinal = ordinal;
    out.header.read_count = read_count;
    out.header.matched_count = matched_count;
    out.header.dominant_rounds = dominant_rounds;
    for (unsigned i = 0; i < kFieldCount; ++i) {
        CodecSpec spec = plan[i];
        out.fields[i] = maybe_encode(raw[i], spec);
        if (out.fields[i].size() > UINT32_MAX)
            throw io_error("field stream exceeds the chunk size limit");
        out.header.field_size[i] = uint32_t(out.fields[i].size());
        out.header.field_codec[i] = pack_codec(spec);
        if (!out.fields[i].empty())
            out.header.field_presence |= uint16_t(1u << i);
    }
    return out;
}

void bump_peak(std::atomic<uint64_t>& peak, uint64_t cur) {
    uint64_t prev = peak.load();
    while (prev < cur && !peak.compare_exchange_weak(prev, cur)) {
    }
}

} // namespace

CompressionReport compress_file(const CompressOptions& opt) {
    Clock::time_point wall0 = Clock::now();
    CompressionReport rep;

    Clock::time_point t0 = Clock::now();
    ForwardSequence fseq = build_forward_sequence(opt.ref_path);
    SeedIndex index = load_index(opt.index_path);
    verify_index(index, fseq);
    rep.index_s = seconds_since(t0);

    FileHeader hdr;
    hdr.flags = (opt.keep_names ? kFlagKeepNames : 0) |
                (opt.gzip_output ? kFlagGzipOutput : 0) |
                (opt.paired ? kFlagPaired : 0) | (opt.reorder ? kFlagReorder : 0);
    hdr.seed_k = uint8_t(index.k);
    hdr.quality_mode = uint8_t(opt.quality_mode);
    hdr.lossy_bins = uint8_t(opt.lossy_bins);
    hdr.max_candidates = uint8_t(opt.align.max_candidates);
    hdr.max_hamming_frac = float(opt.align.max_hamming_frac);
    hdr.max_edit_frac = float(opt.align.max_edit_frac);
    hdr.window_slack_frac = float(opt.align.window_slack_frac);
    hdr.ref_checksum = index.ref_checksum;
    hdr.reads_per_chunk = opt.reads_per_chunk;
    ArchiveWriter writer(opt.output, hdr);

    std::unique_ptr<BatchReader> reader;
    if (opt.paired) {
        if (opt.inputs.size() != 2)
            throw io_error("paired compression expects exactly two input files");
        reader = std::make_unique<BatchReader>(
            std::make_unique<FastqReader>(opt.inputs[0], gz_suffix(opt.inputs[0])),
            std::make_unique<FastqReader>(opt.inputs[1], gz_suffix(opt.inputs[1])),
            opt.reads_per_chunk);
    } else {
        if (opt.inputs.size() != 1)
            throw io_error("single-end compression expects exactly one input file");
        reader = std::make_unique<BatchReader>(
            std::make_unique<FastqReader>(opt.inputs[0], gz_suffix(opt.inputs[0])),
            opt.reads_per_chunk);
    }

    StageNanos times;
    FieldPlan plan(kFieldCount, CodecSpec{});

    // The first batch is processed here, on the calling thread: its raw field
    // streams feed codec selection, and every later chunk reuses that plan.
    std::optional<ReadBatch> first = reader->next_batch();
    if (first.has_value()) {
        uint32_t rc = 0;
        uint32_t mc = 0;
        uint8_t rounds = 0;
        std::array<Bytes, kFieldCount> raw =
            build_raw_fields(*first, index, fseq, opt, times, rc, mc, rounds);
        for (unsigned i = 0; i < kFieldCount; ++i) plan[i] = choose_codec(raw[i]);
        ChunkPayload p = encode_chunk_payload(uint32_t(first->batch_index), std::move(raw),
                                              plan, rc, mc, rounds);
        writer.append_chunk(p.header, p.fields);
        rep.records += rc;
        rep.matched += mc;
        ++rep.chunks;
        first.reset();
    }

    if (opt.threads <= 1) {
        while (std::optional<ReadBatch> b = reader->next_batch()) {
            if (b->batch_index > UINT32_MAX) throw io_error("too many chunks");
            uint32_t rc = 0;
            uint32_t mc = 0;
            uint8_t rounds = 0;
            std::array<Bytes, kFieldCount> raw =
                build_raw_fields(*b, index, fseq, opt, times, rc, mc, rounds);
            ChunkPayload p = encode_chunk_payload(uint32_t(b->batch_index), std::move(raw),
                                                  plan, rc, mc, rounds);
            writer.append_chunk(p.header, p.fields);
            rep.records += rc;
            rep.matched += mc;
            ++rep.chunks;
        }
    } else {
        const unsigned workers = opt.threads;
        BoundedQueue<ReadBatch> work(2 * workers);
        BoundedQueue<ChunkPayload> done(2 * workers);
        std::atomic<uint64_t> in_flight{0};
        std::atomic<uint64_t> peak{0};
        std::atomic<uint64_t> recs{0};
        std::atomic<uint64_t> mats{0};
        // read queue + workers + write queue + the one in the writer's hands
        rep.in_flight_bound = uint64_t(2 * workers) + workers + 2 * workers + 1;

        std::mutex err_mu;
        std::exception_ptr first_error;
        auto fail = [&](std::exception_ptr e) {
            {
                std::lock_guard lk(err_mu);
                if (!first_error) first_error = e;
            }
            work.close();
            done.close();
        };

        std::thread read_thread([&] {
            try {
                while (std::optional<ReadBatch> b = reader->next_batch()) {
                    if (b->batch_index > UINT32_MAX) throw io_error("too many chunks");
                    bump_peak(peak, in_flight.fetch_add(1) + 1);
                    if (!work.push(std::move(*b))) {
                        in_flight.fetch_sub(1);
                        return;
                    }
                }
            } catch (...) {
                fail(std::current_exception());
            }
            work.close();
        });

        std::vector<std::thread> worker_threads;
        worker_threads.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            worker_threads.emplace_back([&] {
                try {
                    while (std::optional<ReadBatch> b = work.pop()) {
                        uint32_t rc = 0;
                        uint32_t mc = 0;
                        uint8_t rounds = 0;
                        std::array<Bytes, kFieldCount> raw =
                            build_raw_fields(*b, index, fseq, opt, times, rc, mc, rounds);
                        ChunkPayload p = encode_chunk_payload(
                            uint32_t(b->batch_index), std::move(raw), plan, rc, mc, rounds);
                        recs += rc;
                        mats += mc;
                        if (!done.push(std::move(p))) return;
                    }
                } catch (...) {
                    fail(std::current_exception());
                }
            });
        }

        std::thread close_thread([&] {
            for (std::thread& t : worker_threads) t.join();
            done.close();
        });

        // This thread is the writer; chunks are appended in arrival order and
        // the table is sorted at finalize.
        try {
            while (std::optional<ChunkPayload> p = done.pop()) {
                writer.append_chunk(p->header, p->fields);
                ++rep.chunks;
                in_flight.fetch_sub(1);
            }
        } catch (...) {
            fail(std::current_exception());
            while (done.pop().has_value()) {
            }
        }

        read_thread.join();
        close_thread.join();
        rep.records += recs.load();
        rep.matched += mats.load();
        rep.peak_in_flight = peak.load();
        if (first_error) std::rethrow_exception(first_error);
    }

    rep.input_bytes = reader->text_bytes();
    writer.finalize();
    rep.output_bytes = writer.bytes_written();
    rep.plan = plan;
    rep.align_s = double(times.align.load()) * 1e-9;
    rep.sequence_s = double(times.sequence.load()) * 1e-9;
    rep.quality_s = double(times.quality.load()) * 1e-9;
    rep.wall_s = seconds_since(wall0);
    return rep;
}

namespace {

struct DecodedBatch {
    uint64_t ordinal = 0;
    uint32_t read_count = 0;
    std::vector<std::string> seqs;
    std::vector<std::string> quals;
    std::vector<std::string> names; // empty vector when names were dropped
};

DecodedBatch decode_one_chunk(const ArchiveReader& reader, size_t index,
                              const ForwardSequence& fseq) {
    const FileHeader& hdr = reader.header();
    EncodedChunk ec = reader.read_chunk(index);

    const uint64_t stride =
        hdr.paired() ? uint64_t(hdr.reads_per_chunk) * 2 : uint64_t(hdr.reads_per_chunk);
    if (ec.header.read_count > stride)
        throw corruption_error("chunk holds more reads than the chunk size allows");

    std::array<Bytes, kFieldCount> raw;
    for (unsigned i = 0; i < kFieldCount; ++i)
        raw[i] = decode_stream(ec.fields[i], unpack_codec(ec.header.field_codec[i]));

    SequenceSegment seg;
    seg.read_count = ec.header.read_count;
    seg.matched_count = ec.header.matched_count;
    seg.matched_flags = std::move(raw[kFieldMatchedFlags]);
    seg.pos_mode_flags = std::move(raw[kFieldPosModeFlags]);
    seg.pos_deltas = std::move(raw[kFieldPosDeltas]);
    seg.pos_absolutes = std::move(raw[kFieldPosAbsolutes]);
    seg.strand_bits = std::move(raw[kFieldStrandBits]);
    seg.read_lengths = std::move(raw[kFieldReadLengths]);
    seg.bitmap = std::move(raw[kFieldBitmap]);
    seg.non_ref = std::move(raw[kFieldNonRef]);
    seg.non_ref_lengths = std::move(raw[kFieldNonRefLengths]);
    seg.unmatched = std::move(raw[kFieldUnmatched]);
    seg.pair_swap_flags = std::move(raw[kFieldPairSwapFlags]);

    SegmentOptions sopt{hdr.paired(), hdr.reorder()};
    DecodedSequences ds = decode_sequence_segment(seg, fseq, sopt);

    uint64_t total = 0;
    for (uint32_t l : ds.lengths) total += l;
    Bytes qstream = decode_quality_segment(
        raw[kFieldQualMain], raw[kFieldQualRoundLengths], raw[kFieldQualRoundScores],
        raw[kFieldQualRemainder], QualityMode(hdr.quality_mode), hdr.lossy_bins,
        ec.header.dominant_rounds, total);

    DecodedBatch out;
    out.ordinal = ec.header.ordinal;
    out.read_count = ds.read_count;
    out.seqs = std::move(ds.seqs);
    out.quals.reserve(ds.read_count);
    size_t qoff = 0;
    for (uint32_t i = 0; i < ds.read_count; ++i) {
        out.quals.emplace_back(qstream.begin() + qoff, qstream.begin() + qoff + ds.lengths[i]);
        qoff += ds.lengths[i];
    }

    if (hdr.keep_names()) {
        const Bytes& nm = raw[kFieldNames];
        out.names.reserve(ds.read_count);
        size_t start = 0;
        for (size_t i = 0; i < nm.size(); ++i) {
            if (nm[i] == '\n') {
                out.names.emplace_back(nm.begin() + start, nm.begin() + i);
                start = i + 1;
            }
        }
        if (start != nm.size() || out.names.size() != ds.read_count)
            throw corruption_error("name stream does not match the read count");
    } else if (!raw[kFieldNames].empty()) {
        throw corruption_error("name stream present although names were dropped");
    }

    if (hdr.paired()) {
        for (size_t p = 0; p < size_t(ds.read_count) / 2; ++p) {
            if (!ds.pair_swap[p]) continue;
            std::swap(out.seqs[2 * p], out.seqs[2 * p + 1]);
            std::swap(out.quals[2 * p], out.quals[2 * p + 1]);
            if (!out.names.empty()) std::swap(out.names[2 * p], out.names[2 * p + 1]);
        }
    }
    return out;
}

void emit_batch(const DecodedBatch& b, const FileHeader& hdr,
                std::vector<std::unique_ptr<FastqWriter>>& outs) {
    const bool paired = hdr.paired();
    const uint64_t base = b.ordinal * uint64_t(hdr.reads_per_chunk);
    for (uint32_t j = 0; j < b.read_count; ++j) {
        FastqWriter& out = *outs[paired ? (j % 2) : 0];
        if (!b.names.empty()) {
            FastqRecord rec;
            rec.name = b.names[j];
            rec.seq = b.seqs[j];
            rec.qual = b.quals[j];
            out.write(rec);
        } else {
            uint64_t ordinal = base + (paired ? j / 2 : j);
            out.write(ordinal, b.seqs[j], b.quals[j]);
        }
    }
}

} // namespace

DecompressionReport decompress_file(const DecompressOptions& opt) {
    Clock::time_point wall0 = Clock::now();
    DecompressionReport rep;

    ArchiveReader reader(opt.archive_path);
    const FileHeader& hdr = reader.header();

    // Check the reference before any decoding work.
    ForwardSequence fseq = build_forward_sequence(opt.ref_path);
    if (fseq.checksum() != hdr.ref_checksum)
        throw ref_mismatch_error(
            "reference does not match the one the archive was built against");

    const bool paired = hdr.paired();
    if (opt.outputs.size() != (paired ? 2u : 1u))
        throw io_error(paired ? "paired archive expects two output files"
                              : "single-end archive expects one output file");

    std::vector<std::unique_ptr<FastqWriter>> outs;
    for (const std::string& path : opt.outputs)
        outs.push_back(std::make_unique<FastqWriter>(path, hdr.gzip_output()));

    const size_t n_chunks = reader.chunk_count();
    if (opt.threads <= 1) {
        for (size_t i = 0; i < n_chunks; ++i) {
            DecodedBatch b = decode_one_chunk(reader, i, fseq);
            emit_batch(b, hdr, outs);
            rep.records += b.read_count;
        }
    } else {
        BoundedQueue<DecodedBatch> done(2 * opt.threads);
        std::atomic<size_t> next{0};
        std::atomic<bool> stop{false};
        std::mutex err_mu;
        std::exception_ptr first_error;
        auto fail = [&](std::exception_ptr e) {
            {
                std::lock_guard lk(err_mu);
                if (!first_error) first_error = e;
            }
            stop = true;
            done.close();
        };

        std::vector<std::thread> decoders;
        decoders.reserve(opt.threads);
        for (unsigned w = 0; w < opt.threads; ++w) {
            decoders.emplace_back([&] {
                try {
                    while (!stop) {
                        size_t i = next.fetch_add(1);
                        if (i >= n_chunks) return;
                        DecodedBatch b = decode_one_chunk(reader, i, fseq);
                        if (!done.push(std::move(b))) return;
                    }
                } catch (...) {
                    fail(std::current_exception());
                }
            });
        }
        std::thread close_thread([&] {
            for (std::thread& t : decoders) t.join();
            done.close();
        });

        // Chunks arrive in whatever order the decoders finish; this thread
        // restores logical order before writing.
        try {
            std::map<uint64_t, DecodedBatch> pending;
            uint64_t expected = 0;
            while (std::optional<DecodedBatch> b = done.pop()) {
                pending.emplace(b->ordinal, std::move(*b));
                while (!pending.empty() && pending.begin()->first == expected) {
                    emit_batch(pending.begin()->second, hdr, outs);
                    rep.records += pending.begin()->second.read_count;
                    pending.erase(pending.begin());
                    ++expected;
                }
            }
            if (!first_error && expected != n_chunks)
                throw corruption_error("decoder stopped before the last chunk");
        } catch (...) {
            fail(std::current_exception());
            while (done.pop().has_value()) {
            }
        }

        close_thread.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    for (auto& out : outs) out->close();
    rep.chunks = n_chunks;
    rep.wall_s = seconds_since(wall0);
    return rep;
}

} // namespace fqzkit
